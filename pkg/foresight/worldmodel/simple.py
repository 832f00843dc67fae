import logging
import math
from dataclasses import dataclass
import numpy as np

from ..errors import ContractError, ShapeError
from ..tensor import AdamWHyper, AdamWState, Tape, Tensor, adamw_step, gelu, matmul, mean, ParameterStore, WM_PREFIX
from .features import ConditionLatent, FutureFeatures

logger = logging.getLogger(__name__)

SIMPLE_PREFIX = f"{WM_PREFIX}simple."
HIDDEN = 64


@dataclass
class SimpleWMSample:
    current: np.ndarray  # C_wm × H' × W'
    cond: np.ndarray
    future: np.ndarray  # T_wm × C_wm × H' × W'


def _inputs(current: np.ndarray, cond: np.ndarray) -> np.ndarray:
    return np.concatenate([current.mean(axis=(-2, -1)), cond], axis=-1)


class LearnedWM:
    """Per-future-step two-layer perceptron over pooled current latents and the condition.

    The weights of all steps are stacked on a leading T_wm axis so every step is
    evaluated with one batched product. Predicted frames share the shape of the
    current latent.
    """

    NAMES = ("fc1.weight", "fc1.bias", "fc2.weight", "fc2.bias")

    def __init__(self, params: dict[str, np.ndarray]):
        self.params = params

    @property
    def frames(self) -> int:
        return self.params["fc1.weight"].shape[0]

    @classmethod
    def initialize(cls, n_in: int, n_out: int, frames: int, seed: int, hidden: int = HIDDEN) -> "LearnedWM":
        rng = np.random.default_rng([seed, 0x5357])
        return cls({
            "fc1.weight": rng.standard_normal((frames, n_in, hidden)) / math.sqrt(n_in),
            "fc1.bias": np.zeros((frames, 1, hidden)),
            "fc2.weight": rng.standard_normal((frames, hidden, n_out)) / math.sqrt(hidden),
            "fc2.bias": np.zeros((frames, 1, n_out)),
        })

    @staticmethod
    def forward(x: Tensor, params: dict[str, Tensor]) -> Tensor:
        # x: (N, n_in) → (T_wm, N, C_wm·H'·W')
        h = gelu(matmul(x.reshape(1, *x.shape), params["fc1.weight"]) + params["fc1.bias"])
        return matmul(h, params["fc2.weight"]) + params["fc2.bias"]

    def predict(self, current: np.ndarray, cond: ConditionLatent | np.ndarray) -> FutureFeatures:
        cond = cond.features() if isinstance(cond, ConditionLatent) else np.asarray(cond)
        if current.size != self.params["fc2.weight"].shape[-1]:
            raise ShapeError(f"current latent {current.shape} does not match simple world model output size")
        x = Tensor(_inputs(current, cond)[None, :])
        out = self.forward(x, {k: Tensor(v) for k, v in self.params.items()}).data
        values = out[:, 0, :].reshape((self.frames,) + current.shape)
        return FutureFeatures(values=values, t_d=None, frame_times=tuple(range(1, self.frames + 1)))

    def to_store(self, store: ParameterStore):
        for name in self.NAMES:
            key = SIMPLE_PREFIX + name
            if key in store:
                store.assign(key, self.params[name], allow_frozen=True)
            else:
                store.add(key, self.params[name])

    @classmethod
    def from_store(cls, store: ParameterStore) -> "LearnedWM | None":
        if not store.has_prefix(SIMPLE_PREFIX):
            return None
        return cls({name: np.array(store[SIMPLE_PREFIX + name].data) for name in cls.NAMES})


def simple_wm_mse(model: LearnedWM, samples: list[SimpleWMSample]) -> float:
    errors = [np.mean((model.predict(s.current, s.cond).values - s.future) ** 2) for s in samples]
    return float(np.mean(errors))


def simple_wm_fit(
    samples: list[SimpleWMSample],
    epochs: int = 200,
    lr: float = 1e-3,
    seed: int = 0,
    hidden: int = HIDDEN,
) -> LearnedWM:
    """Fit the simple world model with full-batch AdamW on squared error."""
    if not samples:
        raise ContractError("simple world model needs at least one training sample")
    frames = samples[0].future.shape[0]
    x = Tensor(np.stack([_inputs(s.current, s.cond) for s in samples]))
    target = np.stack([s.future.reshape(frames, -1) for s in samples], axis=1)

    model = LearnedWM.initialize(x.shape[1], target.shape[-1], frames, seed, hidden)
    state = AdamWState(hyper=AdamWHyper(lr=lr, weight_decay=0.0))
    for epoch in range(epochs):
        params = {k: Tensor(v, requires_grad=True) for k, v in model.params.items()}
        with Tape() as tape:
            diff = LearnedWM.forward(x, params) - target
            loss = mean(diff * diff)
        grads = tape.backward(loss)
        model.params, state = adamw_step(
            model.params, {k: grads.get(t).data for k, t in params.items()}, state
        )
        logger.debug("simple wm epoch %d mse %.6f", epoch, loss.item())
    return model
