import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import numpy as np

from ..dims import ModelDims
from ..perception import CurrentObservation, observe
from ..world.expert import rollout_future
from ..world.scenario import ScenarioSpec
from ..world.state import OccupancyGrid, Trajectory, initial_state
from ..worldmodel.features import ConditionLatent

logger = logging.getLogger(__name__)


@dataclass
class TrainingSample:
    """One scenario at t=0: observation, expert label and ground-truth future grids."""

    scenario_seed: int
    obs: CurrentObservation
    gt: Trajectory
    future_grids: list[OccupancyGrid]

    @property
    def cond(self) -> ConditionLatent:
        return ConditionLatent.from_status(self.obs.ego)


def build_sample(spec: ScenarioSpec, dims: ModelDims) -> TrainingSample:
    state = initial_state(spec)
    obs = observe(state, dims.grid_size, dims.resolution, dims.n_rays)
    grids, gt, _ = rollout_future(spec, state, dims.t_wm, dims.t_f, dims.grid_size, dims.grid_size, dims.resolution)
    return TrainingSample(scenario_seed=spec.seed, obs=obs, gt=gt, future_grids=grids)


def _build(args):
    return build_sample(*args)


def build_samples(specs: list[ScenarioSpec], dims: ModelDims, workers: int = 1) -> list[TrainingSample]:
    if workers > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_build, [(spec, dims) for spec in specs]))
    return [build_sample(spec, dims) for spec in specs]


def batches(count: int, batch_size: int, rng: np.random.Generator) -> list[np.ndarray]:
    order = rng.permutation(count)
    return [order[i : i + batch_size] for i in range(0, count, batch_size)]
