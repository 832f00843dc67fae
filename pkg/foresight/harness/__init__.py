from .run_config import RunConfig, SEED_ENV, resolve_seed, echo_path, write_echo
from .cli import build_parser, generate_set, main, scenario_seed
