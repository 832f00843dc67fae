from .tensor import Tensor, Tape, TapeNode, Gradients, backward, as_tensor
from .ops import (
    add, sub, mul, div, neg, power, matmul, sum, mean, reshape, transpose, index, concat,
    stack, exp, log, sqrt, tanh, gelu, cumsum, softmax, log_softmax, smooth_l1,
    bce_with_logits, scaled_dot_attention,
)
from .optim import AdamWHyper, AdamWState, adamw_step
from .embedding import sinusoidal_embedding, sinusoidal_table, sinusoidal_grid
from .registry import ParameterStore, WM_PREFIX
# layer_norm はパラメータ表を引く層版を公開する（素の演算は ops.layer_norm）
from .layers import (
    init_linear, linear, init_layer_norm, layer_norm, init_attention, attention, init_mlp, mlp,
    init_self_block, self_block, init_cross_block, cross_block,
)
