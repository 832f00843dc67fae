import logging
import math
from dataclasses import replace
from functools import lru_cache

from .geometry import Polyline
from .scenario import AgentSpec, Pose, ScenarioSpec, SpeedProfile
from .state import AgentState, EgoState, WorldState

logger = logging.getLogger(__name__)

WHEELBASE = 2.7
STEER_MAX = 0.5
ACCEL_MAX = 4.0


def step_ego(state: WorldState, accel: float, steer: float, dt: float | None = None) -> WorldState:
    """Advance the ego with a kinematic bicycle.

    Position moves ``v·dt`` along the heading at the middle of the step, so constant
    steering gives equal chords of one circle; speed is then updated by ``a·dt`` and
    clamped at zero. Out-of-range controls are clamped and flagged on the new state.
    """
    dt = state.dt if dt is None else dt
    clamped = abs(steer) > STEER_MAX or abs(accel) > ACCEL_MAX
    if clamped:
        logger.warning("ego control (accel=%.3f, steer=%.3f) clamped to bounds", accel, steer)
        steer = max(-STEER_MAX, min(STEER_MAX, steer))
        accel = max(-ACCEL_MAX, min(ACCEL_MAX, accel))

    pose = state.ego.pose
    v = pose.speed
    yaw_rate = v * math.tan(steer) / WHEELBASE
    mid_heading = pose.heading + 0.5 * yaw_rate * dt
    new_speed = max(0.0, v + accel * dt)
    new_pose = Pose(
        x=pose.x + v * math.cos(mid_heading) * dt,
        y=pose.y + v * math.sin(mid_heading) * dt,
        heading=pose.heading + yaw_rate * dt,
        speed=new_speed,
    )
    ego = EgoState(pose=new_pose, accel=(new_speed - v) / dt, yaw_rate=yaw_rate, control_clamped=clamped)
    return replace(state, ego=ego)


# 速度プロファイルから時刻 t までの走行距離を求める
def profile_arc_length(profile: SpeedProfile, t: float, dt: float) -> float:
    if profile.trigger_step is None or profile.decel <= 0.0:
        return profile.speed * t
    t_brake = profile.trigger_step * dt
    if t <= t_brake:
        return profile.speed * t
    tau = min(t - t_brake, profile.speed / profile.decel)
    return profile.speed * t_brake + profile.speed * tau - 0.5 * profile.decel * tau * tau


def profile_speed(profile: SpeedProfile, t: float, dt: float) -> float:
    if profile.trigger_step is None or profile.decel <= 0.0:
        return profile.speed
    t_brake = profile.trigger_step * dt
    if t <= t_brake:
        return profile.speed
    return max(0.0, profile.speed - profile.decel * (t - t_brake))


@lru_cache(maxsize=4096)
def _script(waypoints: tuple[tuple[float, ...], ...]) -> Polyline:
    return Polyline(waypoints)


def agent_script(agent: AgentSpec) -> Polyline:
    return _script(tuple(tuple(p) for p in agent.waypoints))


def agent_at(agent: AgentSpec, t: float, dt: float) -> AgentState:
    script = agent_script(agent)
    s = profile_arc_length(agent.profile, t, dt)
    speed = profile_speed(agent.profile, t, dt)
    if s >= script.length:
        s, speed = script.length, 0.0
    x, y = script.point_at(s)
    return AgentState(
        x=float(x), y=float(y), heading=script.heading_at(s), speed=speed,
        arc_length=s, length=agent.length, width=agent.width,
    )


def agents_at(spec: ScenarioSpec, t: float) -> tuple[AgentState, ...]:
    return tuple(agent_at(agent, t, spec.dt) for agent in spec.agents)


# 時刻を 1 ステップ進め、エージェントを台本どおり動かす (自車には反応しない)
def step_agents(state: WorldState, spec: ScenarioSpec) -> WorldState:
    step = state.time_step + 1
    return replace(state, time_step=step, agents=agents_at(spec, step * spec.dt))


def advance(state: WorldState, spec: ScenarioSpec, accel: float, steer: float) -> WorldState:
    return step_agents(step_ego(state, accel, steer, spec.dt), spec)
