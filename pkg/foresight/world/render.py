import math
import numpy as np
import shapely
from shapely.geometry import Polygon

from ..errors import ContractError
from .geometry import EGO_LENGTH, EGO_WIDTH, points_in_rectangle, ray_segment_distances, rectangle_corners, to_local
from .scenario import Pose
from .state import OccupancyGrid, WorldState

R_MAX = 50.0


# セル中心の座標 (自車座標系, x 前方 / y 右)
def cell_centres(height: int, width: int, resolution: float) -> tuple[np.ndarray, np.ndarray]:
    rows = np.arange(height, dtype=np.float64)
    cols = np.arange(width, dtype=np.float64)
    x = (height / 2.0 - rows - 0.5) * resolution
    y = (cols - width / 2.0 + 0.5) * resolution
    return np.meshgrid(x, y, indexing="ij")


# 自車の外形と面積で重なるセル (粗い解像度でもセル中心判定で空にならないように)
def _footprint_cells(frame: Pose, pose: Pose, lx: np.ndarray, ly: np.ndarray, resolution: float) -> np.ndarray:
    corners = to_local(frame, rectangle_corners(pose.x, pose.y, pose.heading, EGO_LENGTH, EGO_WIDTH))
    footprint = Polygon(corners)
    centre = corners.mean(axis=0)
    reach = 0.5 * math.hypot(EGO_LENGTH, EGO_WIDTH) + resolution
    near = np.hypot(lx - centre[0], ly - centre[1]) <= reach
    half = 0.5 * resolution
    cells = shapely.box(lx[near] - half, ly[near] - half, lx[near] + half, ly[near] + half)
    mask = np.zeros(lx.shape, dtype=bool)
    mask[near] = shapely.area(shapely.intersection(cells, footprint)) > 1e-9 * resolution ** 2
    return mask


def render_bev(state: WorldState, height: int = 64, width: int = 64, resolution: float = 0.5, frame: Pose | None = None) -> OccupancyGrid:
    """Rasterize the scene into an ego-centred, heading-up occupancy grid.

    ``frame`` fixes the viewing pose; by default it is the state's own ego pose. A cell
    is set when its centre lies inside the drivable area or an agent rectangle. The ego
    channel marks every cell the ego footprint overlaps, so it is never empty while the
    ego is on the grid.
    """
    if height <= 0 or width <= 0:
        raise ContractError(f"grid size must be positive, got {height}x{width}")
    frame = frame or state.ego.pose
    lx, ly = cell_centres(height, width, resolution)
    c, s = math.cos(frame.heading), math.sin(frame.heading)
    wx = frame.x + lx * c - ly * s
    wy = frame.y + lx * s + ly * c

    values = np.zeros((3, height, width), dtype=np.float64)
    values[OccupancyGrid.DRIVABLE] = state.world_map.contains(wx, wy)
    agents = np.zeros((height, width), dtype=bool)
    for agent in state.agents:
        agents |= points_in_rectangle(wx, wy, agent.x, agent.y, agent.heading, agent.length, agent.width)
    values[OccupancyGrid.AGENTS] = agents
    values[OccupancyGrid.EGO] = _footprint_cells(frame, state.ego.pose, lx, ly, resolution)
    return OccupancyGrid(values=values, resolution=resolution)


def _agent_segments(state: WorldState) -> np.ndarray:
    segments = []
    for agent in state.agents:
        corners = rectangle_corners(agent.x, agent.y, agent.heading, agent.length, agent.width)
        segments.append(np.stack([corners, np.roll(corners, -1, axis=0)], axis=1))
    return np.concatenate(segments) if segments else np.zeros((0, 2, 2))


def ray_directions(heading: float, n_rays: int) -> np.ndarray:
    angles = heading + 2.0 * np.pi * np.arange(n_rays) / n_rays
    return np.stack([np.cos(angles), np.sin(angles)], axis=1)


def raycast_ranges(state: WorldState, n_rays: int = 32, r_max: float = R_MAX) -> np.ndarray:
    """Range to the nearest agent edge or drivable-area boundary per ray, capped at ``r_max``.

    Ray 0 points along the ego heading; rays are evenly spaced clockwise. Ranges are
    kept strictly positive.
    """
    if n_rays < 1:
        raise ContractError(f"need at least one ray, got {n_rays}")
    ego = state.ego.pose
    origin = np.array([ego.x, ego.y])
    directions = ray_directions(ego.heading, n_rays)
    segments = np.concatenate([state.world_map.boundary_segments, _agent_segments(state)])
    ranges = ray_segment_distances(origin, directions, segments)
    return np.clip(ranges, 1e-6, r_max)
