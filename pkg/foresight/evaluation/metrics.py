import math
from dataclasses import dataclass
import numpy as np
from dataclasses_json import dataclass_json, Undefined

from ..errors import ContractError, ShapeError
from ..world.dynamics import agents_at
from ..world.expert import EpisodeTrace
from ..world.geometry import EGO_LENGTH, EGO_WIDTH, rectangle_polygon, to_world, wrap_angle
from ..world.scenario import Pose, ScenarioSpec
from ..world.state import AgentState, Trajectory

TTC_WINDOW = 1.0
TTC_STEP = 0.1
TTC_MIN_SPEED = 5e-3
MAX_ACCEL = 3.0
MAX_JERK = 6.0
MAX_YAW_RATE = 0.6
MIN_EXPERT_PROGRESS = 5.0
COLLISION_SUBSTEPS = 5
OPEN_LOOP_HORIZONS = (1.0, 2.0, 3.0)


@dataclass(frozen=True)
class SubScores:
    nc: float
    dac: float
    ttc: float
    comf: float
    ep: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.nc, self.dac, self.ttc, self.comf, self.ep)


@dataclass_json(undefined=Undefined.EXCLUDE)
@dataclass(frozen=True)
class PDMSWeights:
    w_ttc: float = 5.0
    w_comf: float = 2.0
    w_ep: float = 5.0

    def __post_init__(self):
        if min(self.w_ttc, self.w_comf, self.w_ep) <= 0:
            raise ContractError(f"PDMS weights must be positive, got {self}")


@dataclass(frozen=True)
class OpenLoopMetrics:
    l2: tuple[float, float, float]
    collision: tuple[float, float, float]

    @property
    def l2_avg(self) -> float:
        return float(np.mean(self.l2))

    @property
    def collision_avg(self) -> float:
        return float(np.mean(self.collision))


def pdms(sub: SubScores, w: PDMSWeights = PDMSWeights()) -> float:
    inner = (w.w_ttc * sub.ttc + w.w_comf * sub.comf + w.w_ep * sub.ep) / (w.w_ttc + w.w_comf + w.w_ep)
    return sub.nc * sub.dac * inner


# 各ステップの変位の向き。ほぼ止まっている間は直前の向きを引き継ぐ
def displacement_headings(points: np.ndarray, initial: float) -> np.ndarray:
    headings = np.empty(len(points) - 1)
    current = initial
    for k, delta in enumerate(np.diff(points, axis=0)):
        if np.hypot(*delta) >= 1e-3:
            current = math.atan2(delta[1], delta[0])
        headings[k] = current
    return headings


def _agent_polygon(agent: AgentState):
    return rectangle_polygon(agent.x, agent.y, agent.heading, agent.length, agent.width)


def _ego_polygon(point, heading: float):
    return rectangle_polygon(float(point[0]), float(point[1]), heading, EGO_LENGTH, EGO_WIDTH)


def _executed_poses(executed: Trajectory, spec: ScenarioSpec, steps: int) -> tuple[np.ndarray, np.ndarray]:
    init = spec.ego_init
    points = np.vstack([[init.x, init.y], executed.points[:steps]])
    if executed.headings is not None:
        headings = np.concatenate([[init.heading], executed.headings[:steps]])
    else:
        headings = np.concatenate([[init.heading], displacement_headings(points, init.heading)])
    return points, headings


def _at_fault_collision(points, headings, spec: ScenarioSpec, dt: float) -> bool:
    for k in range(1, len(points)):
        velocity = (points[k] - points[k - 1]) / dt
        for j in range(1, COLLISION_SUBSTEPS + 1):
            frac = j / COLLISION_SUBSTEPS
            centre = points[k - 1] + frac * (points[k] - points[k - 1])
            heading = headings[k - 1] + frac * float(wrap_angle(headings[k] - headings[k - 1]))
            ego = _ego_polygon(centre, heading)
            for agent in agents_at(spec, (k - 1 + frac) * dt):
                other = _agent_polygon(agent)
                if not ego.intersects(other):
                    continue
                contact = np.array(ego.intersection(other).centroid.coords[0])
                if float(np.dot(velocity, contact - centre)) > 0.0:
                    return True
    return False


def _drivable_compliant(points, headings, world_map) -> bool:
    return all(world_map.covers_footprint(p[0], p[1], h) for p, h in zip(points, headings))


def _ttc_clear(points, headings, spec: ScenarioSpec, dt: float) -> bool:
    offsets = np.arange(1, int(round(TTC_WINDOW / TTC_STEP)) + 1) * TTC_STEP
    for k in range(1, len(points)):
        velocity = (points[k] - points[k - 1]) / dt
        if np.hypot(*velocity) < TTC_MIN_SPEED:
            continue
        for tau in offsets:
            ego = _ego_polygon(points[k] + velocity * tau, headings[k])
            if any(ego.intersects(_agent_polygon(a)) for a in agents_at(spec, k * dt + tau)):
                return False
    return True


def comfort_profile(points: np.ndarray, headings: np.ndarray, initial_speed: float, dt: float) -> dict[str, np.ndarray]:
    speeds = np.concatenate([[initial_speed], np.hypot(*np.diff(points, axis=0).T) / dt])
    accel = np.diff(speeds) / dt
    jerk = np.diff(accel) / dt
    yaw_rate = wrap_angle(np.diff(headings)) / dt
    return {"speed": speeds, "accel": accel, "jerk": jerk, "yaw_rate": yaw_rate}


def _comfortable(points, initial_speed: float, initial_heading: float, dt: float) -> bool:
    headings = np.concatenate([[initial_heading], displacement_headings(points, initial_heading)])
    profile = comfort_profile(points, headings, initial_speed, dt)
    return bool(
        np.all(np.abs(profile["accel"]) <= MAX_ACCEL + 1e-9)
        and np.all(np.abs(profile["jerk"]) <= MAX_JERK + 1e-9)
        and np.all(np.abs(profile["yaw_rate"]) <= MAX_YAW_RATE + 1e-9)
    )


def _progress(world_map, start: Pose, end) -> float:
    s0, _ = world_map.route.project([start.x, start.y])
    s1, _ = world_map.route.project(end)
    return s1 - s0


def score_scenario(executed: Trajectory, spec: ScenarioSpec, trace: EpisodeTrace) -> SubScores:
    """Score a world-frame trajectory executed non-reactively against the scripted agents.

    The horizon is the length of the expert ``trace``; ``executed`` must cover it.
    """
    steps = len(trace.states) - 1
    if len(executed) < steps:
        raise ContractError(f"executed trajectory has {len(executed)} waypoints, horizon needs {steps}")
    if steps < 1:
        raise ContractError("scoring needs at least one simulated step")
    dt = spec.dt
    world_map = trace.initial.world_map
    points, headings = _executed_poses(executed, spec, steps)

    nc = 0.0 if _at_fault_collision(points, headings, spec, dt) else 1.0
    dac = 1.0 if _drivable_compliant(points, headings, world_map) else 0.0
    ttc = 1.0 if _ttc_clear(points, headings, spec, dt) else 0.0
    comf = 1.0 if _comfortable(points, spec.ego_init.speed, spec.ego_init.heading, dt) else 0.0

    expert_end = trace.states[-1].ego.pose
    expert_progress = _progress(world_map, spec.ego_init, [expert_end.x, expert_end.y])
    if expert_progress < MIN_EXPERT_PROGRESS:
        ep = 1.0
    else:
        ep = float(np.clip(_progress(world_map, spec.ego_init, points[-1]) / expert_progress, 0.0, 1.0))
    return SubScores(nc=nc, dac=dac, ttc=ttc, comf=comf, ep=ep)


def horizon_index(seconds: float, dt: float, length: int) -> int:
    return min(max(int(round(seconds / dt)) - 1, 0), length - 1)


# 記録軌跡との L2 と 1/2/3 秒時点の衝突 (どちらも t=0 の自車座標系)
def open_loop_metrics(pred: Trajectory, gt: Trajectory, trace: EpisodeTrace) -> OpenLoopMetrics:
    if pred.points.shape != gt.points.shape:
        raise ShapeError(f"predicted horizon {pred.points.shape} does not match ground truth {gt.points.shape}")
    if len(trace.states) <= len(pred):
        raise ContractError(f"trace covers {len(trace.states) - 1} steps, prediction has {len(pred)}")
    frame = trace.initial.ego.pose
    world = to_world(frame, pred.points)
    headings = displacement_headings(np.vstack([[0.0, 0.0], pred.points]), 0.0) + frame.heading
    hits = []
    for k, (point, heading) in enumerate(zip(world, headings), start=1):
        ego = _ego_polygon(point, heading)
        hits.append(any(ego.intersects(_agent_polygon(a)) for a in trace.states[k].agents))

    distances = np.hypot(*(pred.points - gt.points).T)
    l2, collision = [], []
    for seconds in OPEN_LOOP_HORIZONS:
        i = horizon_index(seconds, pred.dt, len(pred))
        l2.append(float(distances[i]))
        collision.append(float(any(hits[: i + 1])))
    return OpenLoopMetrics(l2=tuple(l2), collision=tuple(collision))
