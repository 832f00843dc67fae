import json
from dataclasses import dataclass, field
from typing import Optional
from dataclasses_json import dataclass_json, Undefined

from ..dims import PRESETS, ModelDims
from ..errors import ContractError
from ..schemas import exclude_none
from ..world.scenario import ScenarioKind
from ..worldmodel.model import WMKind
from ..worldmodel.schedule import DenoiseSchedule


@dataclass_json(undefined=Undefined.EXCLUDE)
@dataclass
class TrainConfig:
    lambda1: float = 1.0
    lambda2: float = 1.0
    lr: float = 1e-4
    weight_decay: float = 0.01
    phase1_epochs: int = 40
    phase2_epochs: int = 10
    batch_size: int = 8
    seed: int = 0
    dims: ModelDims = field(default_factory=ModelDims)
    t_d: int = 100
    wm_kind: WMKind = WMKind.ORACLE
    use_qformer: bool = True
    # 構成要素の切り替え (外した構成の比較用)
    use_state_queries: bool = True
    factorized: bool = True
    use_current_encoder: bool = True
    schedule: DenoiseSchedule = field(default_factory=DenoiseSchedule)
    simple_wm_epochs: int = 200
    simple_wm_lr: float = 1e-3
    # 学習データ: scenarios ディレクトリが無ければ train_count 本を生成する
    scenarios: Optional[str] = exclude_none()
    train_count: int = 512
    kinds: list[ScenarioKind] = field(default_factory=lambda: list(ScenarioKind))
    preset: Optional[str] = exclude_none()

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ContractError(f"loss weights must be non-negative, got {self.lambda1}, {self.lambda2}")
        if self.phase1_epochs < 0 or self.phase2_epochs < 0 or self.simple_wm_epochs < 0:
            raise ContractError("epoch counts must be non-negative")
        if self.batch_size < 1:
            raise ContractError(f"batch size must be positive, got {self.batch_size}")
        if self.wm_kind is WMKind.NONE:
            raise ContractError("training needs an oracle or simple world model; use phase 1 for the no-WM planner")
        if not 0 <= self.t_d <= self.schedule.total_steps:
            raise ContractError(f"t_d {self.t_d} outside [0, {self.schedule.total_steps}]")

    def echo(self) -> dict:
        return json.loads(self.to_json())


# preset は dims に明示した値で上書きできる
def load_train_config(data: dict) -> TrainConfig:
    data = dict(data)
    name = data.get("preset")
    if name is not None:
        if name not in PRESETS:
            raise ContractError(f"unknown preset {name!r}, choose from {sorted(PRESETS)}")
        data["dims"] = {**PRESETS[name].to_dict(), **data.get("dims", {})}
    return TrainConfig.schema().load(data)
