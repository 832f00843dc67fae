from .loader import load, loads
from .exporter import export, dumps
from .scenario_set import MANIFEST, ScenarioSet, export_dir, load_dir, scenario_filename
