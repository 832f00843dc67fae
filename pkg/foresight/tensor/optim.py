from dataclasses import dataclass, field, replace
from typing import Mapping
import numpy as np
from dataclasses_json import dataclass_json, Undefined

from ..errors import ContractError, ShapeError


@dataclass_json(undefined=Undefined.EXCLUDE)
@dataclass(frozen=True)
class AdamWHyper:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01


@dataclass
class AdamWState:
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    hyper: AdamWHyper = field(default_factory=AdamWHyper)


def adamw_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamWState,
) -> tuple[dict[str, np.ndarray], AdamWState]:
    """One AdamW update with fully decoupled weight decay.

    The decay ``p ← p − lr·wd·p`` is applied to the current value, independently of the
    bias-corrected moment update. Parameters missing from ``grads`` are treated as
    having zero gradient. Inputs are not modified; new arrays and a new state are
    returned.
    """
    if state.step < 0:
        raise ContractError(f"optimizer step must be non-negative, got {state.step}")
    h = state.hyper
    step = state.step + 1
    correction1 = 1.0 - h.beta1 ** step
    correction2 = 1.0 - h.beta2 ** step

    new_params: dict[str, np.ndarray] = {}
    new_m: dict[str, np.ndarray] = dict(state.m)
    new_v: dict[str, np.ndarray] = dict(state.v)
    for name in sorted(params):
        p = np.asarray(params[name], dtype=np.float64)
        g = grads.get(name)
        g = np.zeros_like(p) if g is None else np.asarray(g, dtype=np.float64)
        if g.shape != p.shape:
            raise ShapeError(f"gradient for {name} has shape {g.shape}, parameter has {p.shape}")
        m = state.m.get(name, np.zeros_like(p))
        v = state.v.get(name, np.zeros_like(p))
        if m.shape != p.shape or v.shape != p.shape:
            raise ShapeError(f"optimizer moments for {name} do not match parameter shape {p.shape}")

        m = h.beta1 * m + (1.0 - h.beta1) * g
        v = h.beta2 * v + (1.0 - h.beta2) * g * g
        decayed = p - h.lr * h.weight_decay * p
        update = (m / correction1) / (np.sqrt(v / correction2) + h.eps)
        new_params[name] = decayed - h.lr * update
        new_m[name] = m
        new_v[name] = v
    return new_params, replace(state, step=step, m=new_m, v=new_v)
