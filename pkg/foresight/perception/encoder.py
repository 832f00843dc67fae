from dataclasses import dataclass

from ..dims import ModelDims
from ..errors import ShapeError
from ..tensor import ParameterStore, Tensor, concat, init_linear, init_self_block, linear, self_block, sinusoidal_grid
from ..world.render import R_MAX
from ..worldmodel.encoder import patchify
from .observation import CurrentObservation

PREFIX = "encoder"
PATCH_EMBED = f"{PREFIX}.patch_embed"
EGO_FEATURES = 6


@dataclass
class CurrentFeatures:
    """Current-frame tokens: patch tokens, then one range token, then one ego token."""

    tokens: Tensor
    n_patches: int

    @property
    def patch_tokens(self) -> Tensor:
        return self.tokens[: self.n_patches]


# full=False なら自車状態のトークンだけ (BEV / 距離スキャンのエンコーダを持たない)
def init_encoder(store: ParameterStore, dims: ModelDims, full: bool = True):
    c = dims.channels
    init_linear(store, f"{PREFIX}.ego", EGO_FEATURES, c)
    if not full:
        return
    init_linear(store, PATCH_EMBED, 3 * dims.patch ** 2, c)
    store.add(f"{PREFIX}.pos_embed", sinusoidal_grid(dims.patches_per_side, dims.patches_per_side, c))
    init_linear(store, f"{PREFIX}.ranges", dims.n_rays, c)
    for i in range(dims.encoder_blocks):
        init_self_block(store, f"{PREFIX}.block{i}", c)


def encode_current(obs: CurrentObservation, store: ParameterStore, dims: ModelDims) -> CurrentFeatures:
    """Token features of the current frame (BEV patches, range scan, ego status).

    A store without the patch embedding holds the ego-only encoder and yields the single
    ego token.
    """
    ego = linear(Tensor(obs.ego.features()[None, :]), store, f"{PREFIX}.ego")
    if f"{PATCH_EMBED}.weight" not in store:
        return CurrentFeatures(tokens=ego, n_patches=0)

    grid = obs.grid
    if grid.height != dims.grid_size or grid.width != dims.grid_size:
        raise ShapeError(f"grid {grid.height}x{grid.width} does not match configured {dims.grid_size}")
    if obs.ranges.shape != (dims.n_rays,):
        raise ShapeError(f"range scan shape {obs.ranges.shape} does not match {dims.n_rays} rays")

    patches = linear(Tensor(patchify(grid.values, dims.patch)), store, PATCH_EMBED)
    patches = patches + store[f"{PREFIX}.pos_embed"]
    ranges = linear(Tensor(obs.ranges[None, :] / R_MAX), store, f"{PREFIX}.ranges")

    x = concat([patches, ranges, ego], axis=0)
    for i in range(dims.encoder_blocks):
        x = self_block(x, store, f"{PREFIX}.block{i}", dims.heads)
    return CurrentFeatures(tokens=x, n_patches=dims.n_patches)
