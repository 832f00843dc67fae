from dataclasses import dataclass
import numpy as np

from ..dims import ModelDims
from ..tensor import ParameterStore, Tensor, cumsum, gelu, init_layer_norm, init_linear, layer_norm, linear
from ..world.state import Trajectory

HEAD = "planner.head"
SCORE = "planner.score"
OFFSET_SCALE = 4.0


@dataclass
class PlanOutput:
    """M candidate trajectories (ego frame at t=0), their logits and the selected mode."""

    trajectories: Tensor  # M × T_f × 2
    offsets: Tensor  # M × T_f × 2
    mode_scores: Tensor  # M
    selected: int
    dt: float = 0.5

    @property
    def modes(self) -> int:
        return self.trajectories.shape[0]

    def trajectory(self, mode: int) -> Trajectory:
        return Trajectory(points=np.array(self.trajectories.data[mode]), dt=self.dt)


# per_step=False はモードクエリ1個から T_f 点をまとめて出す
def init_head(store: ParameterStore, dims: ModelDims, per_step: bool = True):
    c = dims.channels
    init_layer_norm(store, f"{HEAD}.ln", c)
    init_linear(store, f"{HEAD}.fc1", c, c)
    init_linear(store, f"{HEAD}.fc2", c, 2 if per_step else 2 * dims.t_f)
    init_linear(store, SCORE, c, 1)


# (モード, ステップ) ごとのオフセットをステップ方向に足し込んで位置にする
def decode_trajectories(queries: Tensor, store: ParameterStore, dt: float = 0.5) -> PlanOutput:
    h = gelu(linear(layer_norm(queries, store, f"{HEAD}.ln"), store, f"{HEAD}.fc1"))
    offsets = linear(h, store, f"{HEAD}.fc2") * OFFSET_SCALE
    if offsets.shape[-1] != 2:
        offsets = offsets.reshape(queries.shape[0], offsets.shape[-1] // 2, 2)
    positions = cumsum(offsets, axis=1)
    scores = linear(queries.mean(axis=1), store, SCORE).reshape(queries.shape[0])
    return PlanOutput(
        trajectories=positions,
        offsets=offsets,
        mode_scores=scores,
        selected=int(np.argmax(scores.data)),
        dt=dt,
    )


def select_mode(output: PlanOutput) -> Trajectory:
    # np.argmax は同点なら最小の添字を返す
    return output.trajectory(int(np.argmax(output.mode_scores.data)))
