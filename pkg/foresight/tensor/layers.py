"""Functional transformer building blocks over a ``ParameterStore``.

Each ``init_*`` creates the parameters of a block under a name prefix; the matching
forward function reads them back by the same prefix.
"""
import math

from ..errors import ShapeError
from . import ops
from .registry import ParameterStore
from .tensor import Tensor


def init_linear(store: ParameterStore, prefix: str, n_in: int, n_out: int, zero: bool = False, bias: bool = True):
    if zero:
        store.zeros(f"{prefix}.weight", (n_in, n_out))
    else:
        store.normal(f"{prefix}.weight", (n_in, n_out), 1.0 / math.sqrt(n_in))
    if bias:
        store.zeros(f"{prefix}.bias", (n_out,))


def linear(x: Tensor, store: ParameterStore, prefix: str) -> Tensor:
    out = ops.matmul(x, store[f"{prefix}.weight"])
    if f"{prefix}.bias" in store:
        out = out + store[f"{prefix}.bias"]
    return out


def init_layer_norm(store: ParameterStore, prefix: str, channels: int):
    store.ones(f"{prefix}.gamma", (channels,))
    store.zeros(f"{prefix}.beta", (channels,))


def layer_norm(x: Tensor, store: ParameterStore, prefix: str) -> Tensor:
    return ops.layer_norm(x, store[f"{prefix}.gamma"], store[f"{prefix}.beta"], eps=1e-5)


def init_attention(store: ParameterStore, prefix: str, channels: int, zero_out: bool = False):
    for name in ("q", "k", "v"):
        init_linear(store, f"{prefix}.{name}", channels, channels)
    init_linear(store, f"{prefix}.out", channels, channels, zero=zero_out)


def _split_heads(x: Tensor, heads: int) -> Tensor:
    *lead, n, channels = x.shape
    x = x.reshape(tuple(lead) + (n, heads, channels // heads))
    k = len(lead)
    return x.transpose(tuple(range(k)) + (k + 1, k, k + 2))


def _merge_heads(x: Tensor) -> Tensor:
    *lead, heads, n, d = x.shape
    k = len(lead)
    x = x.transpose(tuple(range(k)) + (k + 1, k, k + 2))
    return x.reshape(tuple(lead) + (n, heads * d))


# 多頭の scaled dot-product 注意 (先頭の軸はバッチ)
def attention(queries: Tensor, keys: Tensor, store: ParameterStore, prefix: str, heads: int, values: Tensor | None = None) -> Tensor:
    values = keys if values is None else values
    channels = queries.shape[-1]
    if keys.shape[-1] != channels:
        raise ShapeError(f"attention width mismatch: queries {queries.shape}, keys {keys.shape}")
    if channels % heads != 0:
        raise ShapeError(f"width {channels} is not divisible by {heads} heads")
    q = _split_heads(linear(queries, store, f"{prefix}.q"), heads)
    k = _split_heads(linear(keys, store, f"{prefix}.k"), heads)
    v = _split_heads(linear(values, store, f"{prefix}.v"), heads)
    mixed = _merge_heads(ops.scaled_dot_attention(q, k, v))
    return linear(mixed, store, f"{prefix}.out")


def init_mlp(store: ParameterStore, prefix: str, channels: int, ratio: int = 4, zero_out: bool = False):
    init_linear(store, f"{prefix}.fc1", channels, channels * ratio)
    init_linear(store, f"{prefix}.fc2", channels * ratio, channels, zero=zero_out)


def mlp(x: Tensor, store: ParameterStore, prefix: str) -> Tensor:
    return linear(ops.gelu(linear(x, store, f"{prefix}.fc1")), store, f"{prefix}.fc2")


def init_self_block(store: ParameterStore, prefix: str, channels: int, zero_out: bool = False):
    init_layer_norm(store, f"{prefix}.ln1", channels)
    init_attention(store, f"{prefix}.attn", channels, zero_out=zero_out)
    init_layer_norm(store, f"{prefix}.ln2", channels)
    init_mlp(store, f"{prefix}.mlp", channels, zero_out=zero_out)


# pre-norm の自己注意ブロック
def self_block(x: Tensor, store: ParameterStore, prefix: str, heads: int) -> Tensor:
    h = layer_norm(x, store, f"{prefix}.ln1")
    x = x + attention(h, h, store, f"{prefix}.attn", heads)
    return x + mlp(layer_norm(x, store, f"{prefix}.ln2"), store, f"{prefix}.mlp")


def init_cross_block(store: ParameterStore, prefix: str, channels: int, zero_out: bool = False):
    init_layer_norm(store, f"{prefix}.ln_q", channels)
    init_layer_norm(store, f"{prefix}.ln_kv", channels)
    init_attention(store, f"{prefix}.attn", channels, zero_out=zero_out)
    init_layer_norm(store, f"{prefix}.ln2", channels)
    init_mlp(store, f"{prefix}.mlp", channels, zero_out=zero_out)


def cross_block(
    queries: Tensor,
    context: Tensor,
    store: ParameterStore,
    prefix: str,
    heads: int,
    query_embed: Tensor | None = None,
    context_embed: Tensor | None = None,
) -> Tensor:
    """Pre-norm cross-attention followed by an MLP, both residual.

    Embeddings are added to the normalized attention inputs only, so the residual
    stream is left untouched when the block's output projections are zero.
    """
    q = layer_norm(queries, store, f"{prefix}.ln_q")
    kv = layer_norm(context, store, f"{prefix}.ln_kv")
    if query_embed is not None:
        q = q + query_embed
    if context_embed is not None:
        kv = kv + context_embed
    x = queries + attention(q, kv, store, f"{prefix}.attn", heads)
    return x + mlp(layer_norm(x, store, f"{prefix}.ln2"), store, f"{prefix}.mlp")
