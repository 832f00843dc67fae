from typing import Iterator, Mapping, Sequence
import numpy as np

from ..errors import FrozenParameterError, ShapeError
from .tensor import Tensor

# 世界モデル側のパラメータ名の接頭辞 (学習中は凍結)
WM_PREFIX = "wm."


class ParameterStore:
    """Named parameter table shared by every learnable component.

    Names are dotted paths (``encoder.block0.attn.q.weight``). Parameters under
    ``wm.`` form the world-model registry: they never require gradients and never
    receive optimizer updates.
    """

    def __init__(self, seed: int | Sequence[int] = 0):
        self._tensors: dict[str, Tensor] = {}
        self.rng = np.random.default_rng(seed)

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._tensors))

    def __len__(self) -> int:
        return len(self._tensors)

    def has_prefix(self, prefix: str) -> bool:
        return any(name.startswith(prefix) for name in self._tensors)

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._tensors:
            raise KeyError(f"parameter {name} already exists")
        tensor = Tensor(value, requires_grad=not name.startswith(WM_PREFIX))
        self._tensors[name] = tensor
        return tensor

    def normal(self, name: str, shape: tuple[int, ...], std: float) -> Tensor:
        return self.add(name, self.rng.standard_normal(shape) * std)

    def zeros(self, name: str, shape: tuple[int, ...]) -> Tensor:
        return self.add(name, np.zeros(shape))

    def ones(self, name: str, shape: tuple[int, ...]) -> Tensor:
        return self.add(name, np.ones(shape))

    def assign(self, name: str, value: np.ndarray, allow_frozen: bool = False):
        current = self._tensors[name]
        value = np.asarray(value, dtype=np.float64)
        if value.shape != current.shape:
            raise ShapeError(f"cannot assign shape {value.shape} to {name} of shape {current.shape}")
        if name.startswith(WM_PREFIX) and not allow_frozen:
            raise FrozenParameterError(f"attempted update of frozen world-model parameter {name}")
        self._tensors[name] = Tensor(value, requires_grad=current.requires_grad)

    def trainable(self) -> dict[str, Tensor]:
        return {n: t for n, t in sorted(self._tensors.items()) if not n.startswith(WM_PREFIX)}

    def wm_registry(self) -> dict[str, Tensor]:
        return {n: t for n, t in sorted(self._tensors.items()) if n.startswith(WM_PREFIX)}

    def arrays(self) -> dict[str, np.ndarray]:
        return {n: np.array(t.data) for n, t in sorted(self._tensors.items())}

    def load_arrays(self, arrays: Mapping[str, np.ndarray]):
        for name in sorted(arrays):
            value = np.asarray(arrays[name], dtype=np.float64)
            if name in self._tensors:
                self.assign(name, value, allow_frozen=True)
            else:
                self.add(name, value)

    def drop_prefix(self, prefix: str):
        for name in [n for n in self._tensors if n.startswith(prefix)]:
            del self._tensors[name]
