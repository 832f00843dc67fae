from .checkpoint import MAGIC, VERSION, Checkpoint
from .loader import load, loads
from .exporter import export, dumps
