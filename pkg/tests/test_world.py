import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import parked_agent, straight_spec
from foresight.errors import ContractError, ScenarioError
from foresight.evaluation import score_scenario
from foresight.scenario_io import ScenarioSet, dumps, export_dir, load_dir, loads
from foresight.world import (
    AgentSpec, Command, OccupancyGrid, Polyline, R_MAX, ScenarioKind, SpeedProfile, agents_at, build_scenario,
    generate_scenario, initial_state, raycast_ranges, render_bev, rollout_future, route_command, run_expert,
    step_ego, to_local, to_world, Trajectory,
)
from foresight.world.geometry import EGO_LENGTH, EGO_WIDTH, points_in_rectangle, rectangle_polygon
from foresight.world.generator import HORIZON_STEPS, _turn_route
from foresight.world.scenario import MapSpec, Pose


def test_local_world_round_trip():
    frame = Pose(x=3.0, y=-2.0, heading=0.7)
    points = np.array([[1.0, 2.0], [-4.0, 0.5]])
    np.testing.assert_allclose(to_local(frame, to_world(frame, points)), points, atol=1e-12)
    # x 前方 / y 右
    ahead = to_world(Pose(x=0.0, y=0.0, heading=0.0), np.array([[2.0, 1.0]]))
    np.testing.assert_allclose(ahead, [[2.0, 1.0]])


def test_polyline_projection_sign():
    line = Polyline([[0.0, 0.0], [10.0, 0.0], [20.0, 0.0]])
    s, lateral = line.project([12.0, 1.5])
    assert s == pytest.approx(12.0)
    assert lateral == pytest.approx(1.5)
    assert line.project([5.0, -2.0])[1] == pytest.approx(-2.0)
    np.testing.assert_allclose(line.point_at(15.0), [15.0, 0.0])


def test_turn_curvature_sign():
    left = Polyline(_turn_route(-1.0, 10.0, 20.0))
    right = Polyline(_turn_route(1.0, 10.0, 20.0))
    assert left.curvature().min() < -0.03
    assert right.curvature().max() > 0.03


def test_constant_steer_gives_equal_chords(empty_road):
    state = initial_state(empty_road)
    points = [[0.0, 0.0]]
    for _ in range(8):
        state = step_ego(state, 0.0, 0.2)
        points.append([state.ego.pose.x, state.ego.pose.y])
    chords = np.diff(np.array(points), axis=0)
    yaw_step = 8.0 * math.tan(0.2) / 2.7 * 0.5
    np.testing.assert_allclose(np.hypot(*chords.T), 4.0)
    # 各ステップの変位は区間中央の向きに沿う
    np.testing.assert_allclose(np.arctan2(chords[:, 1], chords[:, 0]), (np.arange(8) + 0.5) * yaw_step)
    assert state.ego.pose.heading == pytest.approx(8 * yaw_step)
    assert state.ego.pose.speed == pytest.approx(8.0)


def test_control_clamping_is_flagged(empty_road):
    state = step_ego(initial_state(empty_road), 10.0, 0.0)
    assert state.ego.control_clamped
    assert state.ego.accel == pytest.approx(4.0)
    stopped = step_ego(initial_state(straight_spec(speed=1.0)), -4.0, 0.0)
    assert stopped.ego.speed == 0.0


def test_agent_profile_brakes_to_stop():
    agent = AgentSpec(
        length=4.6, width=1.9, waypoints=[[0.0, 0.0], [200.0, 0.0]],
        profile=SpeedProfile(speed=10.0, trigger_step=2, decel=2.0),
    )
    spec = straight_spec(agents=[agent])
    speeds = [agents_at(spec, k * 0.5)[0].speed for k in range(16)]
    assert speeds[:3] == [10.0, 10.0, 10.0]
    assert all(a >= b for a, b in zip(speeds, speeds[1:]))
    assert speeds[-1] == 0.0


def test_render_grid_layout(empty_road):
    state = initial_state(straight_spec(agents=[parked_agent(10.0, 0.0)]))
    grid = render_bev(state, 32, 32, 1.0)
    assert grid.values.shape == (3, 32, 32)
    assert set(np.unique(grid.values)) <= {0.0, 1.0}
    # 前方 10 m の車両は上半分、自車は中央
    rows, _ = np.nonzero(grid.agents)
    assert rows.max() < 16
    assert grid.ego[15, 15] == 1.0 and grid.ego[16, 16] == 1.0
    assert grid.drivable[16, 16] == 1.0
    assert grid.drivable[16, 0] == 0.0
    with pytest.raises(ContractError):
        render_bev(state, 0, 4, 1.0)


def test_ranges_are_capped_and_positive():
    state = initial_state(straight_spec(agents=[parked_agent(12.0, 0.0)]))
    ranges = raycast_ranges(state, 8)
    assert ranges.shape == (8,)
    assert np.all(ranges > 0.0) and np.all(ranges <= R_MAX)
    # 0 番は前方の車両の後端、2 番は右の路端
    assert ranges[0] == pytest.approx(12.0 - 2.3)
    assert ranges[2] == pytest.approx(3.5)


def test_route_command_reports_turns():
    spec = build_scenario(0, ScenarioKind.LEFT_TURN)
    state = initial_state(spec)
    assert route_command(state.world_map, spec.ego_init) is Command.LEFT
    assert route_command(initial_state(straight_spec()).world_map, straight_spec().ego_init) is Command.KEEP


def test_expert_follows_route_on_empty_road(empty_road):
    trace = run_expert(empty_road, initial_state(empty_road), 16)
    final = trace.states[-1].ego.pose
    assert final.x == pytest.approx(8.0 * 8.0, abs=0.5)
    assert abs(final.y) < 0.05
    assert score_scenario(trace.world_trajectory(), empty_road, trace).as_tuple() == (1.0,) * 5


def test_expert_stops_for_parked_car_in_lane():
    spec = straight_spec(agents=[parked_agent(40.0, 0.0)], speed=6.0)
    trace = run_expert(spec, initial_state(spec), 16)
    assert trace.states[-1].ego.pose.x < 40.0 - 4.6
    assert all(s.ego.accel >= -3.0 - 1e-9 for s in trace.states)


def test_rollout_future_shapes(empty_road):
    grids, gt, trace = rollout_future(empty_road, initial_state(empty_road), 4, 6, 16, 16, 2.0)
    assert len(grids) == 4 and all(isinstance(g, OccupancyGrid) for g in grids)
    assert gt.points.shape == (6, 2)
    assert len(trace.states) == 7
    assert gt.points[0, 0] == pytest.approx(4.0, abs=0.1)
    with pytest.raises(ContractError):
        rollout_future(empty_road, initial_state(empty_road), 17)


@pytest.mark.parametrize("kind", list(ScenarioKind))
def test_generated_scenarios_are_clean_for_the_expert(kind):
    spec = generate_scenario(0, kind)
    assert spec.kind is kind
    assert spec.horizon_steps == HORIZON_STEPS
    trace = run_expert(spec, initial_state(spec), spec.horizon_steps)
    assert score_scenario(trace.world_trajectory(), spec, trace).as_tuple() == (1.0,) * 5
    assert dumps(generate_scenario(0, kind)) == dumps(spec)


def test_lead_brake_agent_slows_down():
    for seed in range(5):
        spec = generate_scenario(seed, ScenarioKind.LEAD_BRAKE)
        lead = spec.agents[0]
        trigger = lead.profile.trigger_step
        speeds = [agents_at(spec, k * spec.dt)[0].speed for k in range(trigger + 1, 9)]
        assert all(a > b for a, b in zip(speeds, speeds[1:]) if a > 0.0)


def test_scenario_json_round_trip_and_errors(tmp_path):
    spec = generate_scenario(3, ScenarioKind.CROSSING)
    assert dumps(loads(dumps(spec))) == dumps(spec)
    with pytest.raises(ScenarioError):
        loads("{")
    with pytest.raises(ScenarioError):
        loads('{"format_version": 2}')
    with pytest.raises(ScenarioError):
        loads('{"format_version": 1, "seed": 1}')


def test_scenario_directory_round_trip(tmp_path):
    specs = [generate_scenario(i, ScenarioKind.STRAIGHT) for i in range(2)]
    scenarios = ScenarioSet(ids=["00001", "00000"], specs=specs[::-1])
    export_dir(str(tmp_path), scenarios)
    loaded = load_dir(str(tmp_path))
    assert loaded.ids == ["00000", "00001"]
    assert loaded.hash == scenarios.hash
    assert (tmp_path / "scenario_00000.json").exists()
    assert scenarios.manifest()["count"] == 2


@pytest.mark.parametrize("size,resolution,cells", [(16, 2.0, 8), (32, 1.0, 12), (64, 0.5, 40)])
def test_ego_channel_covers_the_footprint_at_any_resolution(size, resolution, cells):
    grid = render_bev(initial_state(straight_spec()), size, size, resolution)
    assert grid.ego.sum() == cells
    rows, cols = np.nonzero(grid.ego)
    # 中央の 2 列 / 4 行をまたぐ (16x16, 2 m なら 6..9 行, 7..8 列)
    assert rows.min() + rows.max() == size - 1
    assert cols.min() + cols.max() == size - 1


def test_ego_channel_at_two_metre_cells():
    grid = render_bev(initial_state(straight_spec()), 16, 16, 2.0)
    expected = np.zeros((16, 16))
    expected[6:10, 7:9] = 1.0
    np.testing.assert_array_equal(grid.ego, expected)


def _rotate(points, theta: float) -> list[list[float]]:
    c, s = math.cos(theta), math.sin(theta)
    array = np.asarray(points, dtype=float)
    return np.stack([array[:, 0] * c - array[:, 1] * s, array[:, 0] * s + array[:, 1] * c], axis=1).tolist()


def _rotated_spec(spec, theta: float):
    ego = spec.ego_init
    (x, y), = _rotate([[ego.x, ego.y]], theta)
    return replace(
        spec,
        map=MapSpec(
            drivable=[_rotate(ring, theta) for ring in spec.map.drivable],
            route=_rotate(spec.map.route, theta),
            speed_limit=spec.map.speed_limit,
        ),
        ego_init=Pose(x=x, y=y, heading=ego.heading + theta, speed=ego.speed),
        agents=[replace(a, waypoints=_rotate(a.waypoints, theta)) for a in spec.agents],
    )


@pytest.mark.parametrize("theta", [0.3, math.pi / 2, 2.0, -1.1])
def test_render_is_unchanged_when_the_whole_scene_rotates(theta):
    spec = straight_spec(agents=[parked_agent(9.0, 0.0), parked_agent(4.0, -5.0)])
    grid = render_bev(initial_state(spec), 64, 64, 0.5)
    turned = render_bev(initial_state(_rotated_spec(spec, theta)), 64, 64, 0.5)
    # 境界上のセルだけが丸めで食い違ってよい
    differing = np.mean(grid.values != turned.values, axis=(1, 2))
    assert np.all(differing <= 0.02)
    assert grid.agents.sum() > 0


def _marched_ranges(state, n_rays: int, step: float = 0.005) -> np.ndarray:
    ego = state.ego.pose
    t = np.arange(step, R_MAX, step)
    out = np.full(n_rays, R_MAX)
    for i in range(n_rays):
        angle = ego.heading + 2.0 * math.pi * i / n_rays
        px, py = ego.x + t * math.cos(angle), ego.y + t * math.sin(angle)
        blocked = ~state.world_map.contains(px, py)
        for agent in state.agents:
            blocked |= points_in_rectangle(px, py, agent.x, agent.y, agent.heading, agent.length, agent.width)
        if blocked.any():
            out[i] = t[np.argmax(blocked)]
    return out


@pytest.mark.parametrize("spec", [
    straight_spec(agents=[parked_agent(12.0, 0.0)]),
    straight_spec(agents=[parked_agent(8.0, 1.5), parked_agent(-9.0, -1.0)]),
    generate_scenario(2, ScenarioKind.CROSSING),
    generate_scenario(1, ScenarioKind.LEFT_TURN),
], ids=["ahead", "offset", "crossing", "left_turn"])
def test_raycast_matches_ray_marching(spec):
    state = initial_state(spec)
    np.testing.assert_allclose(raycast_ranges(state, 24), _marched_ranges(state, 24), atol=0.01)


def _cell(x: float, y: float, size: int, resolution: float) -> tuple[int, int] | None:
    row, col = int(math.floor(size / 2 - x / resolution)), int(math.floor(y / resolution + size / 2))
    return (row, col) if 0 <= row < size and 0 <= col < size else None


def test_render_and_raycast_agree():
    state = initial_state(straight_spec(agents=[parked_agent(12.0, 0.0)]))
    size, resolution, n_rays = 64, 0.5, 16
    grid = render_bev(state, size, size, resolution)
    ranges = raycast_ranges(state, n_rays)
    free = grid.drivable.astype(bool) & ~grid.agents.astype(bool)
    checked = 0
    for i, r in enumerate(ranges):
        a = 2.0 * math.pi * i / n_rays
        # 局所座標では x 前方 / y 右で、光線は時計回りに並ぶ
        before = _cell((r - 1.0) * math.cos(a), (r - 1.0) * math.sin(a), size, resolution)
        if before is not None and r > 1.5:
            assert free[before], f"ray {i}: cell before the hit is not free"
            checked += 1
        after = _cell((r + 1.0) * math.cos(a), (r + 1.0) * math.sin(a), size, resolution)
        if after is not None and r < R_MAX:
            assert not free[after], f"ray {i}: cell past the hit is free"
            checked += 1
    assert checked >= n_rays


@pytest.mark.parametrize("steer", [0.1, -0.1, 0.0])
def test_step_ego_matches_finer_integration(steer):
    coarse = initial_state(straight_spec(speed=10.0))
    fine = coarse
    for _ in range(10):
        coarse = step_ego(coarse, 0.0, steer, 0.5)
    for _ in range(100):
        fine = step_ego(fine, 0.0, steer, 0.05)
    gap = math.hypot(coarse.ego.pose.x - fine.ego.pose.x, coarse.ego.pose.y - fine.ego.pose.y)
    assert gap <= 0.2
    assert coarse.ego.pose.heading == pytest.approx(fine.ego.pose.heading)


@pytest.mark.parametrize("seed", range(5))
def test_crossing_agent_reaches_the_conflict_point_on_schedule(seed):
    spec = generate_scenario(seed, ScenarioKind.CROSSING)
    agent = spec.agents[0]
    x_c, y0 = agent.waypoints[0]
    step = int(round(-y0 / (agent.profile.speed * spec.dt)))
    assert 2 <= step <= 5
    at_conflict = agents_at(spec, step * spec.dt)[0]
    assert at_conflict.x == pytest.approx(x_c)
    assert at_conflict.y == pytest.approx(0.0, abs=1e-6)
    assert agents_at(spec, (step - 1) * spec.dt)[0].y < 0.0
    assert agents_at(spec, (step + 1) * spec.dt)[0].y > 0.0
    # 交差地点は自車の進路上
    s, lateral = initial_state(spec).world_map.route.project([x_c, 0.0])
    assert abs(lateral) < 1e-6 and s > 0.0


def _dense_scores(points: np.ndarray, spec, substeps: int = 100) -> tuple[float, float, float]:
    """Collision, drivable and time-to-collision flags of a straight +x trajectory, sampled finely in time."""
    state = initial_state(spec)
    dt = spec.dt
    all_points = np.vstack([[spec.ego_init.x, spec.ego_init.y], points])
    headings = np.zeros(len(all_points))
    nc, ttc = 1.0, 1.0
    for k in range(1, len(all_points)):
        velocity = (all_points[k] - all_points[k - 1]) / dt
        for frac in np.linspace(0.0, 1.0, substeps + 1)[1:]:
            centre = all_points[k - 1] + frac * (all_points[k] - all_points[k - 1])
            ego = rectangle_polygon(centre[0], centre[1], 0.0, EGO_LENGTH, EGO_WIDTH)
            for a in agents_at(spec, (k - 1 + frac) * dt):
                other = rectangle_polygon(a.x, a.y, a.heading, a.length, a.width)
                if ego.intersects(other) and np.dot(velocity, np.array(ego.intersection(other).centroid.coords[0]) - centre) > 0:
                    nc = 0.0
        if np.hypot(*velocity) < 5e-3:
            continue
        for tau in np.linspace(0.0, 1.0, substeps + 1)[1:]:
            ego = rectangle_polygon(*(all_points[k] + velocity * tau), 0.0, EGO_LENGTH, EGO_WIDTH)
            if any(ego.intersects(rectangle_polygon(a.x, a.y, a.heading, a.length, a.width)) for a in agents_at(spec, k * dt + tau)):
                ttc = 0.0
    dac = 1.0
    for point, heading in zip(all_points, headings):
        footprint = rectangle_polygon(point[0], point[1], heading, EGO_LENGTH, EGO_WIDTH)
        if not state.world_map.drivable.buffer(1e-9).covers(footprint):
            dac = 0.0
    return nc, dac, ttc


def _lead(x0: float, speed: float) -> AgentSpec:
    return AgentSpec(length=4.6, width=1.9, waypoints=[[x0, 0.0], [x0 + 200.0, 0.0]], profile=SpeedProfile(speed=speed))


@pytest.mark.parametrize("agents,speed,lateral", [
    ([parked_agent(30.0, 0.0)], 4.0, 0.0),
    ([parked_agent(30.0, 0.0)], 8.0, 0.0),
    ([parked_agent(30.0, 0.0)], 12.0, 0.0),
    ([parked_agent(30.0, 0.0)], 0.0, 0.0),
    ([_lead(15.0, 6.0)], 4.0, 0.0),
    ([_lead(15.0, 6.0)], 8.0, 0.0),
    ([_lead(15.0, 6.0)], 12.0, 0.0),
    ([parked_agent(20.0, 3.5)], 8.0, 0.0),
    ([], 8.0, 1.0),
    ([], 8.0, 4.0),
])
def test_sub_scores_match_a_finely_sampled_reference(agents, speed, lateral):
    spec = straight_spec(agents=agents)
    trace = run_expert(spec, initial_state(spec), 8)
    k = np.arange(1, 9)
    points = np.stack([speed * 0.5 * k, np.full(8, lateral)], axis=1)
    sub = score_scenario(Trajectory(points=points, headings=np.zeros(8)), spec, trace)
    assert (sub.nc, sub.dac, sub.ttc) == _dense_scores(points, spec)
