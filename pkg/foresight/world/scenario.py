from dataclasses import dataclass
from enum import Enum
from typing import Optional
from dataclasses_json import dataclass_json, Undefined

from ..schemas import exclude_none

SCENARIO_FORMAT_VERSION = 1


class ScenarioKind(Enum):
    STRAIGHT = "straight"
    LEFT_TURN = "left_turn"
    RIGHT_TURN = "right_turn"
    LEAD_BRAKE = "lead_brake"
    CROSSING = "crossing"
    CONGESTION = "congestion"


@dataclass_json(undefined=Undefined.EXCLUDE)
@dataclass
class Pose:
    x: float
    y: float
    heading: float
    speed: float = 0.0


@dataclass_json(undefined=Undefined.EXCLUDE)
@dataclass
class SpeedProfile:
    # トリガー時刻までは一定速度、その後 decel で減速して停止
    speed: float
    trigger_step: Optional[int] = exclude_none()
    decel: float = 0.0


@dataclass_json(undefined=Undefined.EXCLUDE)
@dataclass
class AgentSpec:
    length: float
    width: float
    waypoints: list[list[float]]
    profile: SpeedProfile


@dataclass_json(undefined=Undefined.EXCLUDE)
@dataclass
class MapSpec:
    # drivable: 多角形の外周リスト, route: 中心線 (m)
    drivable: list[list[list[float]]]
    route: list[list[float]]
    speed_limit: float


@dataclass_json(undefined=Undefined.EXCLUDE)
@dataclass
class ScenarioSpec:
    seed: int
    kind: ScenarioKind
    map: MapSpec
    ego_init: Pose
    agents: list[AgentSpec]
    horizon_steps: int
    dt: float = 0.5
