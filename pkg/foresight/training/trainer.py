import logging
import math
from dataclasses import dataclass, field
import numpy as np
import pandas as pd

from ..checkpoint import Checkpoint
from ..errors import ContractError, DivergenceError, FrozenParameterError
from ..planner import attach_future_branch, forward, has_future_branch, init_planner
from ..tensor import AdamWHyper, AdamWState, ParameterStore, Tape, Tensor, adamw_step
from ..worldmodel import (
    LearnedWM, SimpleWMSample, WMKind, WorldModel, encode_grid, init_grid_encoder, simple_wm_fit,
)
from .bev_head import BEV_HEAD, bev_logits, init_bev_head
from .config import TrainConfig
from .dataset import TrainingSample, batches
from .losses import LossBreakdown, combine, loss_bev, loss_traj, total_loss

logger = logging.getLogger(__name__)

LOG_COLUMNS = ["step", "l_bev", "l_traj", "l_score", "total"]


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    log: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=LOG_COLUMNS))


def build_store(config: TrainConfig) -> ParameterStore:
    """Phase-1 parameter table: frozen grid encoder, planner without future branch, BEV head.

    The ego-only planner (``use_current_encoder=False``) has no patch tokens and so no
    BEV head.
    """
    dims = config.dims
    store = ParameterStore(config.seed)
    init_grid_encoder(store, config.seed, dims.patch, dims.wm_channels)
    init_planner(store, dims, config.use_current_encoder, config.use_state_queries)
    if config.use_current_encoder:
        init_bev_head(store, dims)
    return store


def sample_loss(
    sample: TrainingSample,
    store: ParameterStore,
    config: TrainConfig,
    world_model: WorldModel | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[Tensor, LossBreakdown]:
    future = None
    if world_model is not None:
        future = world_model.imagine(sample.obs.grid, sample.cond, config.t_d, rng, sample.future_grids)
    output, current = forward(sample.obs, future, store, config.dims, sample.gt.dt)
    if store.has_prefix(BEV_HEAD):
        l_bev = loss_bev(bev_logits(current, store, config.dims), sample.obs.grid)
    else:
        l_bev = Tensor(np.array(0.0))
    l_traj, l_score = loss_traj(output, sample.gt)
    return combine(l_bev, l_traj, l_score, config.lambda1, config.lambda2), total_loss(l_bev, l_traj, l_score, config)


def noise_stream(seed: int, scenario_seed: int, epoch: int | None = None) -> np.random.Generator:
    key = [seed, scenario_seed] if epoch is None else [seed, scenario_seed, epoch]
    return np.random.default_rng(key)


def _run_epochs(
    store: ParameterStore,
    config: TrainConfig,
    samples: list[TrainingSample],
    epochs: int,
    phase: int,
    world_model: WorldModel | None,
) -> pd.DataFrame:
    if epochs > 0 and not samples:
        raise ContractError("training needs at least one sample")
    state = AdamWState(hyper=AdamWHyper(lr=config.lr, weight_decay=config.weight_decay))
    rows = []
    for epoch in range(epochs):
        order_rng = np.random.default_rng([config.seed, phase, epoch])
        for batch in batches(len(samples), config.batch_size, order_rng):
            trainable = store.trainable()
            with Tape() as tape:
                parts = []
                losses = []
                for i in batch:
                    sample = samples[int(i)]
                    rng = noise_stream(config.seed, sample.scenario_seed, epoch)
                    loss, breakdown = sample_loss(sample, store, config, world_model, rng)
                    losses.append(loss)
                    parts.append(breakdown)
                total = losses[0]
                for loss in losses[1:]:
                    total = total + loss
                total = total / float(len(losses))

            step = state.step + 1
            row = {
                "step": step,
                "l_bev": float(np.mean([p.l_bev for p in parts])),
                "l_traj": float(np.mean([p.l_traj for p in parts])),
                "l_score": float(np.mean([p.l_score for p in parts])),
            }
            row["total"] = config.lambda1 * row["l_bev"] + config.lambda2 * (row["l_traj"] + row["l_score"])
            if not math.isfinite(total.item()):
                last_good = Checkpoint.from_store(store, config.echo(), config.seed)
                raise DivergenceError(f"phase {phase} loss became {total.item()} at step {step}", step, last_good)

            grads = tape.backward(total)
            if any(t in grads for t in store.wm_registry().values()):
                raise FrozenParameterError("world-model parameters received gradients")
            arrays = {name: t.data for name, t in trainable.items()}
            new_arrays, state = adamw_step(arrays, {n: grads.get(t).data for n, t in trainable.items()}, state)
            for name, value in new_arrays.items():
                store.assign(name, value)
            rows.append(row)
            logger.debug("phase %d step %d total %.6f", phase, step, row["total"])
    return pd.DataFrame(rows, columns=LOG_COLUMNS)


# 現在特徴だけで encoder / stage-1 / ヘッドを学習
def train_phase1(config: TrainConfig, samples: list[TrainingSample]) -> TrainResult:
    store = build_store(config)
    log = _run_epochs(store, config, samples, config.phase1_epochs, phase=1, world_model=None)
    return TrainResult(checkpoint=Checkpoint.from_store(store, config.echo(), config.seed), log=log)


def simple_wm_samples(samples: list[TrainingSample], store: ParameterStore, patch: int) -> list[SimpleWMSample]:
    return [
        SimpleWMSample(
            current=encode_grid(s.obs.grid, store, patch),
            cond=s.cond.features(),
            future=np.stack([encode_grid(g, store, patch) for g in s.future_grids]),
        )
        for s in samples
    ]


# phase-1 を読み込み、凍結した WM を用意して未来側の枝を付ける
def attach_phase2(config: TrainConfig, phase1: Checkpoint, samples: list[TrainingSample]) -> tuple[ParameterStore, WorldModel]:
    dims = config.dims
    store = phase1.to_store(seed=[config.seed, 2])
    if has_future_branch(store):
        raise ContractError("phase-1 checkpoint already carries a future branch")
    if config.wm_kind is WMKind.SIMPLE and LearnedWM.from_store(store) is None:
        fitted = simple_wm_fit(
            simple_wm_samples(samples, store, dims.patch),
            epochs=config.simple_wm_epochs,
            lr=config.simple_wm_lr,
            seed=config.seed,
        )
        fitted.to_store(store)
    attach_future_branch(store, dims, config.use_qformer, config.factorized)
    return store, WorldModel(config.wm_kind, store, config.schedule, dims.patch)


def train_phase2(config: TrainConfig, phase1: Checkpoint, samples: list[TrainingSample]) -> TrainResult:
    """Post-train every non-world-model parameter with the future branch attached.

    The world-model registry is audited before and after; any drift raises
    ``FrozenParameterError``.
    """
    store, world_model = attach_phase2(config, phase1, samples)
    frozen = {name: np.array(t.data) for name, t in store.wm_registry().items()}
    log = _run_epochs(store, config, samples, config.phase2_epochs, phase=2, world_model=world_model)
    after = store.wm_registry()
    drift = sum(float(np.abs(after[name].data - value).sum()) for name, value in frozen.items())
    if sorted(after) != sorted(frozen) or drift != 0.0:
        raise FrozenParameterError(f"world-model registry changed during post-training (drift {drift})")
    return TrainResult(checkpoint=Checkpoint.from_store(store, config.echo(), config.seed), log=log)


def evaluate_losses(
    checkpoint: Checkpoint,
    config: TrainConfig,
    samples: list[TrainingSample],
    world_kind: WMKind = WMKind.NONE,
) -> LossBreakdown:
    """Mean loss breakdown of a checkpoint on held-out samples (no parameter updates)."""
    store = checkpoint.to_store()
    world_model = None
    if world_kind is not WMKind.NONE and has_future_branch(store):
        world_model = WorldModel(world_kind, store, config.schedule, config.dims.patch)
    parts = []
    for sample in samples:
        rng = noise_stream(config.seed, sample.scenario_seed)
        parts.append(sample_loss(sample, store, config, world_model, rng)[1])
    return LossBreakdown(
        total=float(np.mean([p.total for p in parts])),
        l_bev=float(np.mean([p.l_bev for p in parts])),
        l_traj=float(np.mean([p.l_traj for p in parts])),
        l_score=float(np.mean([p.l_score for p in parts])),
    )
