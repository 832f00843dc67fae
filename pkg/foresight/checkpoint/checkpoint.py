from dataclasses import dataclass, field
import numpy as np

from ..tensor import ParameterStore

MAGIC = b"WACKPT1\0"
VERSION = 1


@dataclass
class Checkpoint:
    """Parameter table plus the configuration and seed that produced it."""

    params: dict[str, np.ndarray]
    config: dict = field(default_factory=dict)
    seed: int = 0
    version: int = VERSION

    @classmethod
    def from_store(cls, store: ParameterStore, config: dict, seed: int) -> "Checkpoint":
        return cls(params=store.arrays(), config=config, seed=seed)

    def to_store(self, seed=None) -> ParameterStore:
        store = ParameterStore(self.seed if seed is None else seed)
        store.load_arrays(self.params)
        return store

    def same_params(self, other: "Checkpoint") -> bool:
        if sorted(self.params) != sorted(other.params):
            return False
        return all(np.array_equal(self.params[n], other.params[n]) for n in self.params)
