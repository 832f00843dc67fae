from dataclasses import dataclass
import numpy as np

from ..errors import ContractError
from ..world.state import Command, EgoStatus


@dataclass
class FutureFeatures:
    """Imagined feature volume T_wm × C_wm × H' × W' read out at denoising step ``t_d`` (None for the learned predictor)."""

    values: np.ndarray
    t_d: int | None
    frame_times: tuple[int, ...]

    def __post_init__(self):
        if self.values.ndim != 4 or len(self.frame_times) != self.values.shape[0]:
            raise ContractError(
                f"future features {self.values.shape} do not match {len(self.frame_times)} frame times"
            )
        if self.frame_times and (self.frame_times[0] != 1 or np.any(np.diff(self.frame_times) <= 0)):
            raise ContractError(f"frame times must increase from 1, got {self.frame_times}")

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def channels(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class ConditionLatent:
    command: Command
    speed: float
    yaw_rate: float

    @classmethod
    def from_status(cls, status: EgoStatus) -> "ConditionLatent":
        return cls(command=status.command, speed=status.speed, yaw_rate=status.yaw_rate)

    def features(self) -> np.ndarray:
        onehot = [float(self.command is c) for c in Command]
        return np.array([*onehot, self.speed / 10.0, self.yaw_rate / 0.6])


CONDITION_SIZE = len(Command) + 2
