import numpy as np
import pytest

from foresight.dims import ModelDims
from foresight.world import AgentSpec, MapSpec, Pose, ScenarioKind, ScenarioSpec, SpeedProfile
from foresight.world.generator import _road


@pytest.fixture
def tiny_dims() -> ModelDims:
    return ModelDims(
        channels=8, heads=2, encoder_blocks=1, patch=8, grid_size=16, resolution=2.0,
        n_rays=8, modes=3, t_f=4, t_wm=4, n_wm=2, wm_channels=8,
    )


def straight_spec(agents=None, speed: float = 8.0, seed: int = 7, horizon_steps: int = 16) -> ScenarioSpec:
    route = np.stack([np.linspace(-30.0, 170.0, 201), np.zeros(201)], axis=1)
    return ScenarioSpec(
        seed=seed,
        kind=ScenarioKind.STRAIGHT,
        map=MapSpec(drivable=[_road(route)], route=route.tolist(), speed_limit=speed),
        ego_init=Pose(x=0.0, y=0.0, heading=0.0, speed=speed),
        agents=agents or [],
        horizon_steps=horizon_steps,
        dt=0.5,
    )


def parked_agent(x: float, y: float) -> AgentSpec:
    return AgentSpec(length=4.6, width=1.9, waypoints=[[x, y], [x + 1.0, y]], profile=SpeedProfile(speed=0.0))


@pytest.fixture
def empty_road() -> ScenarioSpec:
    return straight_spec()


def numeric_gradient(f, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central differences of the scalar ``f`` at ``x``."""
    grad = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        plus, minus = x.copy(), x.copy()
        plus[i] += eps
        minus[i] -= eps
        grad[i] = (f(plus) - f(minus)) / (2 * eps)
    return grad
