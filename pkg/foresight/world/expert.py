import math
from dataclasses import dataclass
import numpy as np

from ..errors import ContractError
from .dynamics import WHEELBASE, advance
from .geometry import to_local
from .render import render_bev
from .scenario import ScenarioSpec
from .state import OccupancyGrid, Trajectory, WorldState

# IDM のパラメータ
IDM_ACCEL = 1.5
IDM_DECEL = 2.0
IDM_MIN_GAP = 2.0
IDM_HEADWAY = 1.5
IDM_DELTA = 4
ACCEL_BOUNDS = (-3.0, 2.0)
ACCEL_RATE = 2.0
MAX_EXPERT_YAW_RATE = 0.5
LANE_HALF_WIDTH = 2.5


@dataclass
class EpisodeTrace:
    """Expert episode: every simulated state from t=0 plus the expert's world-frame path."""

    states: list[WorldState]

    @property
    def initial(self) -> WorldState:
        return self.states[0]

    def world_trajectory(self) -> Trajectory:
        points = np.array([[s.ego.pose.x, s.ego.pose.y] for s in self.states[1:]])
        headings = np.array([s.ego.pose.heading for s in self.states[1:]])
        return Trajectory(points=points, dt=self.states[0].dt, headings=headings)


def pure_pursuit_steer(state: WorldState) -> float:
    pose = state.ego.pose
    route = state.world_map.route
    s, _ = route.project([pose.x, pose.y])
    lookahead = max(6.0, 0.8 * pose.speed)
    target = to_local(pose, route.point_at(s + lookahead))
    alpha = math.atan2(target[1], target[0])
    steer = math.atan2(2.0 * WHEELBASE * math.sin(alpha), lookahead)
    if pose.speed > 1e-6:
        limit = math.atan(MAX_EXPERT_YAW_RATE * WHEELBASE / pose.speed)
        steer = max(-limit, min(limit, steer))
    return steer


# 自車線の前方にいる同方向の最も近いエージェントとの車間と速度
def _lead_gap(state: WorldState) -> tuple[float, float] | None:
    pose = state.ego.pose
    route = state.world_map.route
    s_ego, _ = route.project([pose.x, pose.y])
    best = None
    for agent in state.agents:
        s, lateral = route.project([agent.x, agent.y])
        if s <= s_ego or abs(lateral) > LANE_HALF_WIDTH:
            continue
        if abs(np.angle(np.exp(1j * (agent.heading - route.heading_at(s))))) > math.pi / 4:
            continue
        gap = s - s_ego - 0.5 * (agent.length + 4.6)
        if best is None or gap < best[0]:
            best = (gap, agent.speed)
    return best


def idm_accel(state: WorldState, desired_speed: float) -> float:
    v = state.ego.speed
    free = 1.0 - (v / max(desired_speed, 0.1)) ** IDM_DELTA
    interaction = 0.0
    lead = _lead_gap(state)
    if lead is not None:
        gap, lead_speed = lead
        gap = max(gap, 0.1)
        desired_gap = IDM_MIN_GAP + max(0.0, v * IDM_HEADWAY + v * (v - lead_speed) / (2.0 * math.sqrt(IDM_ACCEL * IDM_DECEL)))
        interaction = (desired_gap / gap) ** 2
    return IDM_ACCEL * (free - interaction)


def expert_controls(state: WorldState, desired_speed: float) -> tuple[float, float]:
    accel = idm_accel(state, desired_speed)
    previous = state.ego.accel
    accel = min(max(accel, previous - ACCEL_RATE), previous + ACCEL_RATE)
    accel = min(max(accel, ACCEL_BOUNDS[0]), ACCEL_BOUNDS[1])
    if state.ego.speed + accel * state.dt < 0.0:
        accel = -state.ego.speed / state.dt
    return accel, pure_pursuit_steer(state)


def run_expert(spec: ScenarioSpec, state: WorldState, steps: int) -> EpisodeTrace:
    states = [state]
    for _ in range(steps):
        accel, steer = expert_controls(states[-1], spec.map.speed_limit)
        states.append(advance(states[-1], spec, accel, steer))
    return EpisodeTrace(states=states)


def rollout_future(
    spec: ScenarioSpec,
    state: WorldState,
    t_wm: int,
    t_f: int | None = None,
    height: int = 64,
    width: int = 64,
    resolution: float = 0.5,
) -> tuple[list[OccupancyGrid], Trajectory, EpisodeTrace]:
    """Simulate the expert forward and render its futures in the t=0 ego frame.

    Returns ``t_wm`` future grids (steps 1..t_wm), the expert trajectory over ``t_f``
    steps in the t=0 ego frame, and the episode trace used to produce both.
    """
    t_f = t_wm if t_f is None else t_f
    steps = max(t_wm, t_f)
    if state.time_step + steps > spec.horizon_steps:
        raise ContractError(
            f"rollout of {steps} steps from step {state.time_step} exceeds horizon {spec.horizon_steps}"
        )
    trace = run_expert(spec, state, steps)
    frame = state.ego.pose
    grids = [render_bev(s, height, width, resolution, frame=frame) for s in trace.states[1 : t_wm + 1]]
    world = trace.world_trajectory()
    local = to_local(frame, world.points[:t_f])
    headings = world.headings[:t_f] - frame.heading
    return grids, Trajectory(points=local, dt=spec.dt, headings=headings), trace
