import logging
import numpy as np

from ..dims import ModelDims
from ..perception import CurrentFeatures, CurrentObservation, encode_current, init_encoder
from ..tensor import ParameterStore
from ..world.state import OccupancyGrid
from ..worldmodel.features import ConditionLatent, FutureFeatures
from ..worldmodel.model import WorldModel
from .components import PlannerComponents
from .decode import factorized_decode, init_stage1, init_stage2
from .head import PlanOutput, decode_trajectories, init_head
from .qformer import QFORMER, VANILLA, CompressedFuture, init_qformer, init_vanilla, wm_qformer, wm_vanilla
from .queries import init_state_queries, state_queries

logger = logging.getLogger(__name__)


def init_planner(
    store: ParameterStore, dims: ModelDims, use_current_encoder: bool = True, use_state_queries: bool = True,
):
    """Phase-1 parameters: encoder, state (or mode) queries, stage-1 attention and heads."""
    init_encoder(store, dims, full=use_current_encoder)
    init_state_queries(store, dims, time_indexed=use_state_queries)
    init_stage1(store, dims)
    init_head(store, dims, per_step=use_state_queries)


def attach_future_branch(store: ParameterStore, dims: ModelDims, use_qformer: bool = True, factorized: bool = True):
    """Add the phase-2 future branch; its output projections start at zero.

    With ``factorized=False`` no stage-2 block is added and the stage-1 block attends
    over current and future tokens together.
    """
    if use_qformer:
        init_qformer(store, dims)
    else:
        init_vanilla(store, dims)
    if factorized:
        init_stage2(store, dims)


def has_future_branch(store: ParameterStore) -> bool:
    return store.has_prefix(QFORMER) or store.has_prefix(VANILLA)


def components(store: ParameterStore) -> PlannerComponents:
    return PlannerComponents.from_names(store)


def compress_future(features: FutureFeatures, store: ParameterStore, dims: ModelDims) -> CompressedFuture:
    if store.has_prefix(QFORMER):
        return wm_qformer(features, store, dims)
    return wm_vanilla(features, store, dims)


def forward(
    obs: CurrentObservation,
    future: FutureFeatures | None,
    store: ParameterStore,
    dims: ModelDims,
    dt: float = 0.5,
) -> tuple[PlanOutput, CurrentFeatures]:
    current = encode_current(obs, store, dims)
    compressed = None
    if future is not None and has_future_branch(store):
        compressed = compress_future(future, store, dims)
    queries = factorized_decode(state_queries(store).values, current.tokens, compressed, store, dims)
    return decode_trajectories(queries, store, dt), current


def plan(
    obs: CurrentObservation,
    world_model: WorldModel | None,
    t_d: int,
    store: ParameterStore,
    dims: ModelDims,
    rng: np.random.Generator,
    rollout: list[OccupancyGrid] | None = None,
    dt: float = 0.5,
) -> PlanOutput:
    """Encode the current frame, imagine the future, and decode ranked trajectories.

    Without a world model (or without an attached future branch) the planner runs its
    phase-1 path over current features only.
    """
    future = None
    if world_model is not None and has_future_branch(store):
        future = world_model.imagine(obs.grid, ConditionLatent.from_status(obs.ego), t_d, rng, rollout)
    elif world_model is not None:
        logger.debug("world model given but no future branch is attached, planning from current features")
    output, _ = forward(obs, future, store, dims, dt)
    return output
