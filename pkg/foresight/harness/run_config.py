import json
import os
from dataclasses import dataclass, field
from typing import Optional
from dataclasses_json import dataclass_json, Undefined

from ..errors import UsageError
from ..schemas import exclude_none

SEED_ENV = "WA_SEED"


@dataclass_json(undefined=Undefined.EXCLUDE)
@dataclass
class RunConfig:
    """Everything a command resolved before running; written next to its outputs."""

    command: str
    workdir: str
    seed: int
    arguments: dict = field(default_factory=dict)
    train: Optional[dict] = exclude_none()
    eval: Optional[dict] = exclude_none()


# --seed, WA_SEED, 設定ファイル, 0 の順に優先
def resolve_seed(flag: int | None, config_value: int | None = None) -> int:
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError as e:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from e
    if config_value is not None:
        return config_value
    return 0


def echo_path(output: str) -> str:
    stem, _ = os.path.splitext(output)
    return f"{stem}.config.json"


def write_echo(output: str, run: RunConfig) -> str:
    path = echo_path(output)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(json.loads(run.to_json()), f, indent=2, sort_keys=True)
        f.write("\n")
    return path
