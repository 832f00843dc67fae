import math
import numpy as np

from ..errors import ShapeError
from ..tensor import ParameterStore, WM_PREFIX
from ..world.state import OccupancyGrid

PATCH = 8
WM_CHANNELS = 32
PROJECTION = f"{WM_PREFIX}encoder.proj"


def patchify(values: np.ndarray, patch: int) -> np.ndarray:
    """(channels, H, W) → (H/p · W/p, channels·p²) with patches in row-major order."""
    channels, height, width = values.shape
    if height % patch or width % patch:
        raise ShapeError(f"grid {height}x{width} is not divisible by patch size {patch}")
    rows, cols = height // patch, width // patch
    blocks = values.reshape(channels, rows, patch, cols, patch)
    return blocks.transpose(1, 3, 0, 2, 4).reshape(rows * cols, channels * patch * patch)


# patchify の逆 (1 チャネルのみ)
def unpatchify(tokens: np.ndarray, rows: int, cols: int, patch: int) -> np.ndarray:
    blocks = tokens.reshape(rows, cols, patch, patch)
    return blocks.transpose(0, 2, 1, 3).reshape(rows * patch, cols * patch)


def init_grid_encoder(store: ParameterStore, seed: int, patch: int = PATCH, channels: int = WM_CHANNELS, grid_channels: int = 3):
    # 凍結した射影。ストアの乱数列とは独立に seed から作る
    n_in = grid_channels * patch * patch
    rng = np.random.default_rng([seed, 0x574D])
    store.add(PROJECTION, rng.standard_normal((n_in, channels)) / math.sqrt(n_in))


# 凍結した線形射影による潜在 C_wm × H/p × W/p (バイアス無し)
def encode_grid(grid: OccupancyGrid, store: ParameterStore, patch: int = PATCH) -> np.ndarray:
    projection = store[PROJECTION].data
    tokens = patchify(grid.values, patch)
    if tokens.shape[1] != projection.shape[0]:
        raise ShapeError(f"patch features {tokens.shape} do not match encoder projection {projection.shape}")
    rows, cols = grid.height // patch, grid.width // patch
    return (tokens @ projection).T.reshape(projection.shape[1], rows, cols)
