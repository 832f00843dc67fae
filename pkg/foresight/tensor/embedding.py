import numpy as np

from ..errors import ContractError


def sinusoidal_embedding(t: int, channels: int) -> np.ndarray:
    """Fixed time embedding: e[2i] = sin(t/10000^(2i/C)), e[2i+1] = cos(t/10000^(2i/C))."""
    if channels <= 0 or channels % 2 != 0:
        raise ContractError(f"sinusoidal embedding needs an even positive width, got {channels}")
    if t < 0:
        raise ContractError(f"time index must be non-negative, got {t}")
    i = np.arange(channels // 2, dtype=np.float64)
    angle = float(t) / np.power(10000.0, 2.0 * i / channels)
    out = np.empty(channels, dtype=np.float64)
    out[0::2] = np.sin(angle)
    out[1::2] = np.cos(angle)
    return out


def sinusoidal_table(times, channels: int) -> np.ndarray:
    return np.stack([sinusoidal_embedding(int(t), channels) for t in times])


# パッチ位置用の2次元埋め込み (前半が行、後半が列)
def sinusoidal_grid(rows: int, cols: int, channels: int) -> np.ndarray:
    if channels % 4 != 0:
        raise ContractError(f"2D sinusoidal embedding needs width divisible by 4, got {channels}")
    half = channels // 2
    row_table = sinusoidal_table(range(rows), half)
    col_table = sinusoidal_table(range(cols), half)
    grid = np.empty((rows, cols, channels))
    grid[:, :, :half] = row_table[:, None, :]
    grid[:, :, half:] = col_table[None, :, :]
    return grid.reshape(rows * cols, channels)
