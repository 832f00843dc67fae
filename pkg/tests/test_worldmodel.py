import numpy as np
import pytest

from foresight.errors import ContractError, ShapeError
from foresight.tensor import ParameterStore
from foresight.world import Command, initial_state, rollout_future, render_bev
from foresight.worldmodel import (
    ConditionLatent, DenoiseSchedule, FutureFeatures, LearnedWM, ScheduleShape, SimpleWMSample, WMKind,
    WorldModel, encode_grid, imagine_future, init_grid_encoder, noise_sigma, patchify, simple_wm_fit,
    simple_wm_mse, unpatchify,
)

COND = ConditionLatent(command=Command.KEEP, speed=8.0, yaw_rate=0.0)


def test_linear_and_cosine_schedules():
    linear = DenoiseSchedule()
    assert noise_sigma(0, linear) == 1.0
    assert noise_sigma(50, linear) == pytest.approx(0.5)
    assert noise_sigma(100, linear) == 0.0
    cosine = DenoiseSchedule(shape=ScheduleShape.COSINE)
    assert noise_sigma(0, cosine) == pytest.approx(1.0)
    assert noise_sigma(50, cosine) == pytest.approx(0.5)
    assert noise_sigma(100, cosine) == 0.0
    sigmas = [noise_sigma(t, cosine) for t in range(0, 101, 10)]
    assert all(a >= b for a, b in zip(sigmas, sigmas[1:]))
    with pytest.raises(ContractError):
        noise_sigma(101, linear)
    with pytest.raises(ContractError):
        noise_sigma(-1, linear)


def test_patchify_row_major_and_inverse():
    values = np.arange(2 * 4 * 4, dtype=float).reshape(2, 4, 4)
    tokens = patchify(values, 2)
    assert tokens.shape == (4, 8)
    # 2 番目のパッチは右上、チャネル 0 の 2×2 が先頭
    np.testing.assert_array_equal(tokens[1, :4], [2.0, 3.0, 6.0, 7.0])
    np.testing.assert_array_equal(unpatchify(patchify(values[:1], 2), 2, 2, 2), values[0])
    with pytest.raises(ShapeError):
        patchify(values, 3)


def test_grid_encoder_is_frozen_and_seeded(empty_road):
    grid = render_bev(initial_state(empty_road), 16, 16, 2.0)
    a, b = ParameterStore(0), ParameterStore(99)
    init_grid_encoder(a, 5, patch=8, channels=8)
    init_grid_encoder(b, 5, patch=8, channels=8)
    latent = encode_grid(grid, a, 8)
    assert latent.shape == (8, 2, 2)
    np.testing.assert_array_equal(latent, encode_grid(grid, b, 8))
    assert not a.trainable()


def _oracle_inputs(spec, t_wm: int = 4):
    state = initial_state(spec)
    grids, _, _ = rollout_future(spec, state, t_wm, t_wm, 16, 16, 2.0)
    store = ParameterStore(0)
    init_grid_encoder(store, 0, patch=8, channels=8)
    return grids, store


def test_oracle_is_clean_at_full_denoising(empty_road):
    grids, store = _oracle_inputs(empty_road)
    future = imagine_future(grids, COND, 100, DenoiseSchedule(), np.random.default_rng(0), store, 8)
    clean = np.stack([encode_grid(g, store, 8) for g in grids])
    np.testing.assert_array_equal(future.values, clean)
    assert future.frame_times == (1, 2, 3, 4)
    assert future.t_d == 100


def test_oracle_noise_is_shared_across_steps(empty_road):
    grids, store = _oracle_inputs(empty_road)
    clean = np.stack([encode_grid(g, store, 8) for g in grids])
    noisy = {
        t: imagine_future(grids, COND, t, DenoiseSchedule(), np.random.default_rng([1, 2]), store, 8).values
        for t in (0, 50)
    }
    np.testing.assert_allclose(noisy[50] - clean, 0.5 * (noisy[0] - clean), atol=1e-12)
    with pytest.raises(ContractError):
        imagine_future(None, COND, 50, DenoiseSchedule(), np.random.default_rng(0), store, 8)


def test_world_model_kinds(empty_road):
    grids, store = _oracle_inputs(empty_road)
    rng = np.random.default_rng(0)
    assert WorldModel(WMKind.NONE, store).imagine(grids[0], COND, 50, rng) is None
    with pytest.raises(ContractError):
        WorldModel(WMKind.SIMPLE, store)
    oracle = WorldModel(WMKind.ORACLE, store, patch=8)
    assert oracle.imagine(grids[0], COND, 50, rng, grids).values.shape == (4, 8, 2, 2)


def test_future_features_validate_frame_times():
    with pytest.raises(ContractError):
        FutureFeatures(values=np.zeros((2, 3, 1, 1)), t_d=0, frame_times=(1, 2, 3))
    with pytest.raises(ContractError):
        FutureFeatures(values=np.zeros((2, 3, 1, 1)), t_d=0, frame_times=(2, 3))


def test_condition_features():
    features = ConditionLatent(command=Command.LEFT, speed=5.0, yaw_rate=-0.3).features()
    np.testing.assert_allclose(features, [0.0, 1.0, 0.0, 0.5, -0.5])


def _simple_samples(count: int = 6):
    rng = np.random.default_rng(4)
    samples = []
    for _ in range(count):
        current = rng.standard_normal((3, 2, 2))
        cond = rng.standard_normal(5)
        future = np.stack([current * 0.5, current * 0.25])
        samples.append(SimpleWMSample(current=current, cond=cond, future=future))
    return samples


def test_simple_world_model_fit_reduces_error():
    samples = _simple_samples()
    start = LearnedWM.initialize(3 + 5, 12, 2, seed=0, hidden=16)
    fitted = simple_wm_fit(samples, epochs=150, lr=1e-2, seed=0, hidden=16)
    assert simple_wm_mse(fitted, samples) < simple_wm_mse(start, samples)
    prediction = fitted.predict(samples[0].current, samples[0].cond)
    assert prediction.values.shape == (2, 3, 2, 2)
    assert prediction.t_d is None
    with pytest.raises(ContractError):
        simple_wm_fit([])


def test_simple_world_model_store_round_trip():
    model = LearnedWM.initialize(8, 12, 2, seed=1, hidden=4)
    store = ParameterStore(0)
    model.to_store(store)
    assert not store.trainable()
    restored = LearnedWM.from_store(store)
    current = np.ones((3, 2, 2))
    np.testing.assert_array_equal(restored.predict(current, np.zeros(5)).values, model.predict(current, np.zeros(5)).values)
    with pytest.raises(ShapeError):
        restored.predict(np.ones((2, 2, 2)), np.zeros(5))
