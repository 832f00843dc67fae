from dataclasses import dataclass
import numpy as np

from ..errors import ContractError
from ..world.render import R_MAX, raycast_ranges, render_bev
from ..world.state import EgoStatus, OccupancyGrid, WorldState, ego_status


@dataclass
class CurrentObservation:
    grid: OccupancyGrid
    ranges: np.ndarray
    ego: EgoStatus

    def __post_init__(self):
        if not np.all(np.isfinite(self.grid.values)) or not np.all(np.isfinite(self.ranges)):
            raise ContractError("observation contains non-finite values")
        if np.any(self.ranges <= 0.0) or np.any(self.ranges > R_MAX):
            raise ContractError(f"ranges must lie in (0, {R_MAX}]")


def observe(state: WorldState, grid_size: int = 64, resolution: float = 0.5, n_rays: int = 32) -> CurrentObservation:
    return CurrentObservation(
        grid=render_bev(state, grid_size, grid_size, resolution),
        ranges=raycast_ranges(state, n_rays),
        ego=ego_status(state),
    )
