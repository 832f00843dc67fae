"""Compression of imagined future features into a few tokens per frame.

The QFormer runs a spatial stage (learned frame queries cross-attend to one frame's
latent tokens) and then a temporal stage (each query index self-attends across the
frames). The vanilla variant skips compression and hands every latent token to the
decoder.
"""
from dataclasses import dataclass
import numpy as np

from ..dims import ModelDims
from ..errors import ShapeError
from ..tensor import (
    ParameterStore, Tensor, cross_block, init_cross_block, init_linear, init_self_block, linear,
    self_block, sinusoidal_grid, sinusoidal_table,
)
from ..worldmodel.features import FutureFeatures

QFORMER = "planner.qformer"
VANILLA = "planner.vanilla"


@dataclass
class CompressedFuture:
    values: Tensor  # T_wm × N_wm × C
    frame_times: tuple[int, ...]

    @property
    def tokens_per_frame(self) -> int:
        return self.values.shape[1]


def init_qformer(store: ParameterStore, dims: ModelDims):
    c = dims.channels
    init_linear(store, f"{QFORMER}.input", dims.wm_channels, c)
    store.normal(f"{QFORMER}.frame_queries", (dims.n_wm, c), 1.0)
    init_cross_block(store, f"{QFORMER}.spatial", c)
    init_self_block(store, f"{QFORMER}.temporal", c)
    init_linear(store, f"{QFORMER}.out", c, c, zero=True)


def init_vanilla(store: ParameterStore, dims: ModelDims):
    init_linear(store, f"{VANILLA}.proj", dims.wm_channels, dims.channels, zero=True)


def future_time_embed(features: FutureFeatures, channels: int) -> np.ndarray:
    return sinusoidal_table(features.frame_times, channels)


def _frame_tokens(features: FutureFeatures) -> np.ndarray:
    # (T, C_wm, H', W') → (T, H'·W', C_wm), トークンは行優先
    frames, channels = features.values.shape[:2]
    return features.values.reshape(frames, channels, -1).transpose(0, 2, 1)


def wm_qformer(
    features: FutureFeatures,
    store: ParameterStore,
    dims: ModelDims,
    wm_embed: np.ndarray | None = None,
) -> CompressedFuture:
    c = dims.channels
    if features.channels != dims.wm_channels:
        raise ShapeError(f"future features carry {features.channels} channels, expected {dims.wm_channels}")
    wm_embed = future_time_embed(features, c) if wm_embed is None else wm_embed
    frames, rows, cols = features.frames, features.values.shape[2], features.values.shape[3]

    tokens = linear(Tensor(_frame_tokens(features)), store, f"{QFORMER}.input")
    tokens = tokens + sinusoidal_grid(rows, cols, c)
    queries = store[f"{QFORMER}.frame_queries"].reshape(1, dims.n_wm, c) + np.zeros((frames, 1, 1))
    x = cross_block(
        queries, tokens, store, f"{QFORMER}.spatial", dims.heads,
        query_embed=Tensor(wm_embed[:, None, :]),
    )
    x = x.transpose(1, 0, 2) + wm_embed[None, :, :]
    x = self_block(x, store, f"{QFORMER}.temporal", dims.heads).transpose(1, 0, 2)
    return CompressedFuture(values=linear(x, store, f"{QFORMER}.out"), frame_times=features.frame_times)


def wm_vanilla(features: FutureFeatures, store: ParameterStore, dims: ModelDims) -> CompressedFuture:
    if features.channels != dims.wm_channels:
        raise ShapeError(f"future features carry {features.channels} channels, expected {dims.wm_channels}")
    values = linear(Tensor(_frame_tokens(features)), store, f"{VANILLA}.proj")
    return CompressedFuture(values=values, frame_times=features.frame_times)
