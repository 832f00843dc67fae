from ..dims import ModelDims
from ..perception import CurrentFeatures
from ..tensor import ParameterStore, Tensor, init_linear, linear

BEV_HEAD = "aux.bev_head"


def init_bev_head(store: ParameterStore, dims: ModelDims):
    init_linear(store, BEV_HEAD, dims.channels, dims.patch ** 2)


# パッチトークンごとに p×p のロジットを出し、グリッドに並べ直す
def bev_logits(features: CurrentFeatures, store: ParameterStore, dims: ModelDims) -> Tensor:
    side, p = dims.patches_per_side, dims.patch
    cells = linear(features.patch_tokens, store, BEV_HEAD)
    return cells.reshape(side, side, p, p).transpose(0, 2, 1, 3).reshape(side * p, side * p)
