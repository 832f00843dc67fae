from dataclasses import dataclass, field
from enum import Enum
import numpy as np

from .geometry import WorldMap
from .scenario import Pose, ScenarioSpec


class Command(Enum):
    KEEP = "keep"
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class EgoState:
    pose: Pose
    accel: float = 0.0
    yaw_rate: float = 0.0
    control_clamped: bool = False

    @property
    def speed(self) -> float:
        return self.pose.speed


@dataclass(frozen=True)
class AgentState:
    x: float
    y: float
    heading: float
    speed: float
    arc_length: float
    length: float
    width: float


@dataclass(frozen=True)
class WorldState:
    time_step: int
    ego: EgoState
    agents: tuple[AgentState, ...]
    world_map: WorldMap = field(repr=False, compare=False)
    dt: float = 0.5


@dataclass(frozen=True)
class EgoStatus:
    speed: float
    accel: float
    yaw_rate: float
    command: Command

    def features(self) -> np.ndarray:
        # 正規化した自車状態 + コマンドの one-hot
        onehot = [float(self.command is c) for c in Command]
        return np.array([self.speed / 10.0, self.accel / 3.0, self.yaw_rate / 0.6, *onehot])


@dataclass
class OccupancyGrid:
    """Ego-centred heading-up raster with channels (drivable, agents, ego)."""

    values: np.ndarray
    resolution: float

    DRIVABLE = 0
    AGENTS = 1
    EGO = 2

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    @property
    def agents(self) -> np.ndarray:
        return self.values[self.AGENTS]

    @property
    def drivable(self) -> np.ndarray:
        return self.values[self.DRIVABLE]

    @property
    def ego(self) -> np.ndarray:
        return self.values[self.EGO]


@dataclass
class Trajectory:
    """T waypoints (x, y) spaced ``dt`` apart, in the frame stated by the producer."""

    points: np.ndarray
    dt: float = 0.5
    headings: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.points)


def initial_state(spec: ScenarioSpec, world_map: WorldMap | None = None) -> WorldState:
    from .dynamics import agents_at

    world_map = world_map or WorldMap(spec.map)
    return WorldState(
        time_step=0,
        ego=EgoState(pose=spec.ego_init),
        agents=agents_at(spec, 0.0),
        world_map=world_map,
        dt=spec.dt,
    )


def route_command(world_map: WorldMap, pose: Pose, lookahead: float = 30.0, threshold: float = 0.3) -> Command:
    route = world_map.route
    s, _ = route.project([pose.x, pose.y])
    change = float(np.angle(np.exp(1j * (route.heading_at(s + lookahead) - route.heading_at(s)))))
    if change < -threshold:
        return Command.LEFT
    if change > threshold:
        return Command.RIGHT
    return Command.KEEP


def ego_status(state: WorldState) -> EgoStatus:
    return EgoStatus(
        speed=state.ego.speed,
        accel=state.ego.accel,
        yaw_rate=state.ego.yaw_rate,
        command=route_command(state.world_map, state.ego.pose),
    )
