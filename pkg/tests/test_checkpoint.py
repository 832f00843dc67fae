import struct

import numpy as np
import pytest

from foresight.checkpoint import MAGIC, Checkpoint, dumps, export, load, loads
from foresight.errors import CheckpointFormatError
from foresight.tensor import ParameterStore


@pytest.fixture
def checkpoint():
    store = ParameterStore(0)
    store.normal("planner.b", (2, 3), 1.0)
    store.zeros("planner.a", (4,))
    store.add("wm.encoder.proj", np.arange(6.0).reshape(3, 2))
    store.add("planner.scalar", np.array(2.5))
    return Checkpoint.from_store(store, {"lr": 0.001, "dims": {"channels": 8}}, seed=42)


def test_round_trip_is_bit_exact(checkpoint, tmp_path):
    data = dumps(checkpoint)
    assert data.startswith(MAGIC)
    restored = loads(data)
    assert restored.same_params(checkpoint)
    assert restored.config == checkpoint.config
    assert restored.seed == 42
    assert dumps(restored) == data
    path = tmp_path / "model.ckpt"
    export(str(path), checkpoint)
    assert load(str(path)).same_params(checkpoint)


def test_store_round_trip_keeps_world_model_frozen(checkpoint):
    store = checkpoint.to_store()
    assert not store["wm.encoder.proj"].requires_grad
    assert store["planner.a"].requires_grad
    assert store["planner.scalar"].shape == ()


@pytest.mark.parametrize("mutate", [
    lambda d: b"NOTACKPT" + d[8:],
    lambda d: d[:-3],
    lambda d: d + b"\0",
    lambda d: d[:8] + struct.pack("<I", 2) + d[12:],
])
def test_malformed_checkpoints_are_rejected(checkpoint, mutate):
    with pytest.raises(CheckpointFormatError):
        loads(mutate(dumps(checkpoint)))
