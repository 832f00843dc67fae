from dataclasses import dataclass, replace
from dataclasses_json import dataclass_json, Undefined

from .errors import ContractError


@dataclass_json(undefined=Undefined.EXCLUDE)
@dataclass(frozen=True)
class ModelDims:
    """Widths and counts shared by the encoder, planner and world-model stand-in."""

    channels: int = 64
    heads: int = 4
    encoder_blocks: int = 2
    patch: int = 8
    grid_size: int = 64
    resolution: float = 0.5
    n_rays: int = 32
    modes: int = 20
    t_f: int = 8
    t_wm: int = 8
    n_wm: int = 4
    wm_channels: int = 32

    def __post_init__(self):
        if self.channels % self.heads:
            raise ContractError(f"width {self.channels} is not divisible by {self.heads} heads")
        if self.channels % 4:
            raise ContractError(f"width {self.channels} must be divisible by 4 for 2D positional embeddings")
        if self.grid_size % self.patch:
            raise ContractError(f"grid size {self.grid_size} is not divisible by patch {self.patch}")
        if min(self.modes, self.t_f, self.t_wm, self.n_wm, self.n_rays) < 1:
            raise ContractError("modes, t_f, t_wm, n_wm and n_rays must all be at least 1")

    @property
    def patches_per_side(self) -> int:
        return self.grid_size // self.patch

    @property
    def n_patches(self) -> int:
        return self.patches_per_side ** 2


# 閉ループ評価 (20 モード, 4 秒) と開ループ評価 (6 モード, 3 秒) の既定値
PRESETS = {
    "closed_loop": ModelDims(modes=20, t_f=8, t_wm=8),
    "open_loop": ModelDims(modes=6, t_f=6, t_wm=6),
}


def preset(name: str, **overrides) -> ModelDims:
    if name not in PRESETS:
        raise ContractError(f"unknown preset {name!r}, choose from {sorted(PRESETS)}")
    return replace(PRESETS[name], **overrides)
