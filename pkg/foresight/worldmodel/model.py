from enum import Enum
import numpy as np

from ..errors import ContractError
from ..tensor import ParameterStore
from ..world.state import OccupancyGrid
from .encoder import PATCH, encode_grid
from .features import ConditionLatent, FutureFeatures
from .schedule import DenoiseSchedule, noise_sigma
from .simple import LearnedWM


class WMKind(Enum):
    ORACLE = "oracle"
    SIMPLE = "simple"
    NONE = "none"


def imagine_future(
    rollout: list[OccupancyGrid] | None,
    cond: ConditionLatent,
    t_d: int,
    schedule: DenoiseSchedule,
    rng: np.random.Generator,
    store: ParameterStore,
    patch: int = PATCH,
) -> FutureFeatures:
    """Oracle imagination: clean latents of the true future grids plus σ(t_d)·ε.

    ε is always drawn from ``rng`` so runs that differ only in ``t_d`` share the same
    noise draw.
    """
    if not rollout:
        raise ContractError("oracle imagination needs the ground-truth future rollout")
    clean = np.stack([encode_grid(grid, store, patch) for grid in rollout])
    eps = rng.standard_normal(clean.shape)
    values = clean + noise_sigma(t_d, schedule) * eps
    return FutureFeatures(values=values, t_d=t_d, frame_times=tuple(range(1, len(rollout) + 1)))


class WorldModel:
    """Frozen source of future features for the planner (oracle, learned simple, or none)."""

    def __init__(self, kind: WMKind, store: ParameterStore, schedule: DenoiseSchedule = DenoiseSchedule(), patch: int = PATCH):
        self.kind = WMKind(kind)
        self.store = store
        self.schedule = schedule
        self.patch = patch
        self.simple = LearnedWM.from_store(store) if self.kind is WMKind.SIMPLE else None
        if self.kind is WMKind.SIMPLE and self.simple is None:
            raise ContractError("simple world model requested but no wm.simple parameters are loaded")

    def imagine(
        self,
        grid: OccupancyGrid,
        cond: ConditionLatent,
        t_d: int,
        rng: np.random.Generator,
        rollout: list[OccupancyGrid] | None = None,
    ) -> FutureFeatures | None:
        if self.kind is WMKind.NONE:
            return None
        if self.kind is WMKind.SIMPLE:
            return self.simple.predict(encode_grid(grid, self.store, self.patch), cond)
        return imagine_future(rollout, cond, t_d, self.schedule, rng, self.store, self.patch)
