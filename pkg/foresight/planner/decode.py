import numpy as np

from ..dims import ModelDims
from ..errors import ShapeError
from ..tensor import ParameterStore, Tensor, concat, cross_block, init_cross_block, sinusoidal_table
from .qformer import CompressedFuture
from .queries import STATE_QUERIES

STAGE1 = "planner.stage1"
STAGE2 = "planner.stage2"


def init_stage1(store: ParameterStore, dims: ModelDims):
    init_cross_block(store, STAGE1, dims.channels)


def init_stage2(store: ParameterStore, dims: ModelDims):
    init_cross_block(store, STAGE2, dims.channels, zero_out=True)


def factorized_decode(
    queries: Tensor,
    current: Tensor,
    future: CompressedFuture | None,
    store: ParameterStore,
    dims: ModelDims,
) -> Tensor:
    """Refine M × T_f state queries over current tokens, then over compressed future tokens.

    With stage-2 parameters attached the two interactions are separate blocks. Without
    them a given ``future`` is attended jointly with the current tokens by the stage-1
    block. Time embeddings E_s (one per step, shared by every mode, only for time-indexed
    queries) and E_wm (one per frame, shared by its tokens) are added to the normalized
    attention inputs.
    """
    modes, steps, c = queries.shape
    if current.shape[-1] != c:
        raise ShapeError(f"current features {current.shape} do not match query width {queries.shape}")
    flat = queries.reshape(modes * steps, c)
    if future is None:
        return cross_block(flat, current, store, STAGE1, dims.heads).reshape(modes, steps, c)

    values = future.values
    if values.shape[-1] != c:
        raise ShapeError(f"future features {values.shape} do not match query width {queries.shape}")
    frames, per_frame = values.shape[0], values.shape[1]
    future_tokens = values.reshape(frames * per_frame, c)
    e_s = None
    if STATE_QUERIES in store:
        e_s = Tensor(np.tile(sinusoidal_table(range(1, steps + 1), c), (modes, 1)))
    e_wm = np.repeat(sinusoidal_table(future.frame_times, c), per_frame, axis=0)

    if store.has_prefix(STAGE2):
        flat = cross_block(flat, current, store, STAGE1, dims.heads)
        flat = cross_block(
            flat, future_tokens, store, STAGE2, dims.heads, query_embed=e_s, context_embed=Tensor(e_wm),
        )
    else:
        # 現在と未来のトークンを1回の注意でまとめて見る
        context_embed = np.concatenate([np.zeros((current.shape[0], c)), e_wm])
        flat = cross_block(
            flat, concat([current, future_tokens], axis=0), store, STAGE1, dims.heads,
            query_embed=e_s, context_embed=Tensor(context_embed),
        )
    return flat.reshape(modes, steps, c)
