from .scenario import SCENARIO_FORMAT_VERSION, AgentSpec, MapSpec, Pose, ScenarioKind, ScenarioSpec, SpeedProfile
from .geometry import EGO_LENGTH, EGO_WIDTH, Polyline, WorldMap, rectangle_corners, rectangle_polygon, to_local, to_world, wrap_angle
from .state import Command, EgoState, EgoStatus, AgentState, OccupancyGrid, Trajectory, WorldState, ego_status, initial_state, route_command
from .dynamics import ACCEL_MAX, STEER_MAX, WHEELBASE, advance, agent_at, agents_at, step_agents, step_ego
from .render import R_MAX, raycast_ranges, render_bev
from .expert import EpisodeTrace, expert_controls, rollout_future, run_expert
from .generator import build_scenario, generate_scenario
