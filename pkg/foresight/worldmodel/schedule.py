import math
from dataclasses import dataclass
from enum import Enum
from dataclasses_json import dataclass_json, Undefined

from ..errors import ContractError


class ScheduleShape(Enum):
    LINEAR = "linear"
    COSINE = "cosine"


@dataclass_json(undefined=Undefined.EXCLUDE)
@dataclass(frozen=True)
class DenoiseSchedule:
    total_steps: int = 100
    sigma_max: float = 1.0
    shape: ScheduleShape = ScheduleShape.LINEAR


# t_d ステップのデノイズ後に残る特徴ノイズ
def noise_sigma(t_d: int, schedule: DenoiseSchedule) -> float:
    if not 0 <= t_d <= schedule.total_steps:
        raise ContractError(f"denoising step {t_d} outside [0, {schedule.total_steps}]")
    ratio = t_d / schedule.total_steps
    if schedule.shape is ScheduleShape.COSINE:
        if t_d == schedule.total_steps:
            return 0.0
        return schedule.sigma_max * math.cos(0.5 * math.pi * ratio) ** 2
    return schedule.sigma_max * (1.0 - ratio)
