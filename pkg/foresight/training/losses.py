from dataclasses import dataclass
import numpy as np

from ..errors import ShapeError
from ..planner.head import PlanOutput
from ..tensor import Tensor, bce_with_logits, log_softmax, mean, smooth_l1
from ..world.state import OccupancyGrid, Trajectory


@dataclass(frozen=True)
class LossBreakdown:
    total: float
    l_bev: float
    l_traj: float
    l_score: float


# gt との平均距離が最小のモード (同点なら小さい添字)
def winner_mode(pred: PlanOutput, gt: Trajectory) -> int:
    distances = np.linalg.norm(pred.trajectories.data - gt.points[None], axis=-1).mean(axis=1)
    return int(np.argmin(distances))


def loss_traj(pred: PlanOutput, gt: Trajectory) -> tuple[Tensor, Tensor]:
    """Winner-takes-all smooth-L1 on the closest mode plus cross-entropy on its score.

    The smooth-L1 term sums over (x, y) and averages over waypoints.
    """
    if pred.trajectories.shape[1:] != gt.points.shape:
        raise ShapeError(f"predicted trajectories {pred.trajectories.shape} do not match ground truth {gt.points.shape}")
    m = winner_mode(pred, gt)
    per_point = smooth_l1(pred.trajectories[m] - gt.points).sum(axis=-1)
    l_traj = mean(per_point)
    l_score = -log_softmax(pred.mode_scores, axis=0)[m]
    return l_traj, l_score


# agents チャネルに対するセルごとの BCE の平均
def loss_bev(logits: Tensor, gt_grid: OccupancyGrid) -> Tensor:
    target = gt_grid.agents
    if logits.shape != target.shape:
        raise ShapeError(f"BEV logits {logits.shape} do not match grid {target.shape}")
    return mean(bce_with_logits(logits, target))


def combine(l_bev: Tensor, l_traj: Tensor, l_score: Tensor, lambda1: float, lambda2: float) -> Tensor:
    return l_bev * lambda1 + (l_traj + l_score) * lambda2


def total_loss(l_bev, l_traj, l_score, config) -> LossBreakdown:
    values = [float(x.item() if isinstance(x, Tensor) else x) for x in (l_bev, l_traj, l_score)]
    l_bev, l_traj, l_score = values
    return LossBreakdown(
        total=config.lambda1 * l_bev + config.lambda2 * (l_traj + l_score),
        l_bev=l_bev,
        l_traj=l_traj,
        l_score=l_score,
    )
