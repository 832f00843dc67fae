import math
from dataclasses import replace

import numpy as np
import pytest
from marshmallow import ValidationError

from conftest import parked_agent, straight_spec
from foresight.errors import ContractError, DivergenceError, ShapeError
from foresight.planner import PlanOutput
from foresight.planner import PlannerComponents
from foresight.tensor import Tape, Tensor
from foresight.training import (
    LossBreakdown, TrainConfig, build_samples, evaluate_losses, load_train_config, loss_bev, loss_traj,
    total_loss, train_phase1, train_phase2, winner_mode,
)
from foresight.training import trainer
from foresight.training.dataset import batches
from foresight.world import OccupancyGrid, Trajectory
from foresight.worldmodel import WMKind


@pytest.fixture
def samples(tiny_dims):
    specs = [straight_spec(seed=1), straight_spec(agents=[parked_agent(30.0, 0.0)], seed=2, speed=6.0)]
    return build_samples(specs, tiny_dims)


@pytest.fixture
def config(tiny_dims):
    return TrainConfig(
        dims=tiny_dims, lr=1e-3, phase1_epochs=2, phase2_epochs=1, batch_size=2, simple_wm_epochs=5, seed=3,
    )


def test_config_validation():
    with pytest.raises(ContractError):
        TrainConfig(lambda1=-1.0)
    with pytest.raises(ContractError):
        TrainConfig(wm_kind=WMKind.NONE)
    with pytest.raises(ContractError):
        TrainConfig(t_d=101)
    with pytest.raises(ValidationError):
        load_train_config({"lr": "fast"})


def test_config_preset_and_echo():
    config = load_train_config({"preset": "open_loop", "dims": {"channels": 32}, "wm_kind": "simple"})
    assert config.dims.modes == 6 and config.dims.t_f == 6
    assert config.dims.channels == 32
    assert config.wm_kind is WMKind.SIMPLE
    echo = config.echo()
    assert echo["wm_kind"] == "simple"
    assert load_train_config(echo) == config
    with pytest.raises(ContractError):
        load_train_config({"preset": "nope"})


def _output(trajectories, scores):
    t = Tensor(np.asarray(trajectories, dtype=float))
    return PlanOutput(trajectories=t, offsets=t, mode_scores=Tensor(np.asarray(scores, dtype=float)), selected=0)


def test_loss_traj_uses_closest_mode():
    gt = Trajectory(points=np.array([[1.0, 0.0], [2.0, 0.0]]))
    output = _output([[[5.0, 5.0], [6.0, 6.0]], [[1.5, 0.0], [2.0, 0.0]]], [0.0, 0.0])
    assert winner_mode(output, gt) == 1
    l_traj, l_score = loss_traj(output, gt)
    # 0.5 の誤差は二乗域: 0.5·0.25 を 2 点で平均
    assert l_traj.item() == pytest.approx(0.0625)
    assert l_score.item() == pytest.approx(math.log(2.0))
    with pytest.raises(ShapeError):
        loss_traj(output, Trajectory(points=np.zeros((3, 2))))


def test_loss_bev_on_zero_logits():
    grid = OccupancyGrid(values=np.zeros((3, 4, 4)), resolution=1.0)
    assert loss_bev(Tensor(np.zeros((4, 4))), grid).item() == pytest.approx(math.log(2.0))
    with pytest.raises(ShapeError):
        loss_bev(Tensor(np.zeros((2, 2))), grid)


def test_total_loss_weights(config):
    weighted = TrainConfig(dims=config.dims, lambda1=0.5, lambda2=2.0)
    assert total_loss(1.0, 2.0, 3.0, weighted) == LossBreakdown(total=10.5, l_bev=1.0, l_traj=2.0, l_score=3.0)


def test_batches_cover_every_sample():
    chunks = batches(7, 3, np.random.default_rng(0))
    assert [len(c) for c in chunks] == [3, 3, 1]
    assert sorted(np.concatenate(chunks).tolist()) == list(range(7))


def test_samples_match_dims(samples, tiny_dims):
    sample = samples[0]
    assert sample.obs.grid.values.shape == (3, 16, 16)
    assert sample.gt.points.shape == (tiny_dims.t_f, 2)
    assert len(sample.future_grids) == tiny_dims.t_wm
    assert sample.scenario_seed == 1


def test_phase1_is_deterministic(config, samples):
    first = train_phase1(config, samples)
    second = train_phase1(config, samples)
    assert first.checkpoint.same_params(second.checkpoint)
    assert list(first.log.columns) == ["step", "l_bev", "l_traj", "l_score", "total"]
    assert first.log["step"].tolist() == [1, 2]
    assert np.all(np.isfinite(first.log["total"]))
    assert not any(name.startswith("planner.stage2") for name in first.checkpoint.params)


@pytest.mark.parametrize("kind", [WMKind.ORACLE, WMKind.SIMPLE])
def test_phase2_keeps_world_model_frozen(config, samples, kind):
    phase1 = train_phase1(config, samples).checkpoint
    phase2 = train_phase2(replace(config, wm_kind=kind), phase1, samples).checkpoint
    np.testing.assert_array_equal(phase2.params["wm.encoder.proj"], phase1.params["wm.encoder.proj"])
    assert any(name.startswith("planner.stage2") for name in phase2.params)
    assert any(name.startswith("wm.simple.") for name in phase2.params) == (kind is WMKind.SIMPLE)
    assert not np.array_equal(
        phase2.params["planner.stage1.attn.q.weight"], phase1.params["planner.stage1.attn.q.weight"]
    )
    with pytest.raises(ContractError):
        train_phase2(config, phase2, samples)


def test_divergence_reports_last_good_checkpoint(config, samples, monkeypatch):
    def broken(sample, store, config, world_model=None, rng=None):
        nan = float("nan")
        return Tensor(np.array(nan)), LossBreakdown(total=nan, l_bev=nan, l_traj=nan, l_score=nan)

    monkeypatch.setattr(trainer, "sample_loss", broken)
    with pytest.raises(DivergenceError) as info:
        train_phase1(config, samples)
    assert info.value.step == 1
    assert info.value.last_good is not None
    assert all(np.all(np.isfinite(v)) for v in info.value.last_good.params.values())


def test_evaluate_losses_is_finite(config, samples):
    checkpoint = train_phase1(config, samples).checkpoint
    breakdown = evaluate_losses(checkpoint, config, samples)
    assert math.isfinite(breakdown.total)
    assert breakdown.total == pytest.approx(breakdown.l_bev + breakdown.l_traj + breakdown.l_score)


def test_only_the_winning_mode_gets_waypoint_gradients():
    gt = Trajectory(points=np.array([[1.0, 0.0], [2.0, 0.5], [3.0, 1.5]]))
    rng = np.random.default_rng(0)
    values = gt.points[None] + rng.standard_normal((4, 3, 2)) * np.array([3.0, 0.2, 2.0, 4.0])[:, None, None]
    trajectories = Tensor(values, requires_grad=True)
    scores = Tensor(rng.standard_normal(4), requires_grad=True)
    output = PlanOutput(trajectories=trajectories, offsets=trajectories, mode_scores=scores, selected=0)
    winner = winner_mode(output, gt)
    assert winner == 1
    with Tape() as tape:
        l_traj, l_score = loss_traj(output, gt)
        loss = l_traj + l_score
    grads = tape.backward(loss)
    traj_grad = grads[trajectories].data
    others = [m for m in range(4) if m != winner]
    assert np.all(traj_grad[others] == 0.0)
    assert np.abs(traj_grad[winner]).sum() > 0.0
    # スコアは softmax なので全モードに勾配が届く
    assert np.all(grads[scores].data != 0.0)


def test_component_switches_train_and_round_trip(tiny_dims, samples):
    config = TrainConfig(
        dims=tiny_dims, lr=1e-3, phase1_epochs=1, phase2_epochs=1, batch_size=2, seed=3,
        use_current_encoder=False, use_state_queries=False, factorized=False,
    )
    assert load_train_config(config.echo()) == config
    phase1 = train_phase1(config, samples)
    assert (phase1.log["l_bev"] == 0.0).all()
    assert not any(name.startswith(("aux.bev_head", "encoder.patch_embed")) for name in phase1.checkpoint.params)

    phase2 = train_phase2(config, phase1.checkpoint, samples).checkpoint
    assert not any(name.startswith("planner.stage2") for name in phase2.params)
    layout = PlannerComponents.from_names(phase2.params)
    assert layout == PlannerComponents(
        current_encoder=False, state_queries=False, world_model=True, qformer=True, factorized=False,
    )
    breakdown = evaluate_losses(phase2, config, samples, WMKind.ORACLE)
    assert breakdown.l_bev == 0.0
    assert math.isfinite(breakdown.total)
