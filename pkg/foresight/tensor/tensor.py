from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence
import numpy as np

from ..errors import ContractError, ShapeError


# 現在記録中のテープ (with Tape() as tape: の中だけ有効)
_ACTIVE_TAPES: list["Tape"] = []


def active_tape() -> "Tape | None":
    return _ACTIVE_TAPES[-1] if _ACTIVE_TAPES else None


class Tensor:
    """Dense float64 array that can take part in a gradient tape.

    Leaves are tensors created directly with ``requires_grad=True``. Every op applied
    while a ``Tape`` is active records a node, and the result carries the node's
    handle in ``tape_id``.
    """

    __slots__ = ("data", "requires_grad", "tape_id", "_tape")

    def __init__(self, data, requires_grad: bool = False):
        array = np.array(data, dtype=np.float64)
        if array.ndim == 0:
            array = array.reshape(())
        array.flags.writeable = False
        self.data = array
        self.requires_grad = requires_grad
        self.tape_id: int | None = None
        self._tape: "Tape | None" = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single value, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return np.array(self.data)

    def tracked_by(self, tape: "Tape") -> bool:
        return self._tape is tape and self.tape_id is not None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # 演算子は ops 側の関数に委譲する
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from . import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from . import ops
        return ops.mul(other, self)

    def __truediv__(self, other):
        from . import ops
        return ops.div(self, other)

    def __neg__(self):
        from . import ops
        return ops.neg(self)

    def __pow__(self, exponent: float):
        from . import ops
        return ops.power(self, exponent)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    def __getitem__(self, index):
        from . import ops
        return ops.index(self, index)

    def reshape(self, *shape):
        from . import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def transpose(self, *axes):
        from . import ops
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return ops.transpose(self, axes or None)

    def sum(self, axis=None, keepdims: bool = False):
        from . import ops
        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        from . import ops
        return ops.mean(self, axis=axis, keepdims=keepdims)


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


@dataclass
class TapeNode:
    output_shape: tuple[int, ...]
    parents: tuple[Tensor, ...]
    backward: Callable[[np.ndarray], Sequence[np.ndarray | None]]
    op: str


class Gradients:
    """Leaf gradients produced by ``Tape.backward``, looked up by tensor identity."""

    def __init__(self):
        self._grads: dict[int, Tensor] = {}
        self._leaves: dict[int, Tensor] = {}

    def _accumulate(self, leaf: Tensor, grad: np.ndarray):
        key = id(leaf)
        if key in self._grads:
            self._grads[key] = Tensor(self._grads[key].data + grad)
        else:
            self._grads[key] = Tensor(grad)
            self._leaves[key] = leaf

    def __contains__(self, leaf: Tensor) -> bool:
        return id(leaf) in self._grads

    def __getitem__(self, leaf: Tensor) -> Tensor:
        return self._grads[id(leaf)]

    # loss が依存しない leaf には 0 を返す
    def get(self, leaf: Tensor) -> Tensor:
        if id(leaf) in self._grads:
            return self._grads[id(leaf)]
        return Tensor(np.zeros(leaf.shape))

    def __len__(self) -> int:
        return len(self._grads)

    def __iter__(self) -> Iterator[Tensor]:
        return iter(self._leaves.values())


@dataclass
class Tape:
    """Build-per-forward record of differentiable operations.

    Nodes are appended in execution order, so parents always precede children and a
    single reverse sweep visits every node once.
    """

    nodes: list[TapeNode] = field(default_factory=list)
    visits: int = 0

    def __enter__(self) -> "Tape":
        _ACTIVE_TAPES.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _ACTIVE_TAPES.remove(self)

    def wants(self, inputs: Sequence[Tensor]) -> bool:
        return any(
            x.tracked_by(self) or (x.requires_grad and x.tape_id is None)
            for x in inputs
        )

    def record(self, out: Tensor, parents: Sequence[Tensor], backward, op: str) -> Tensor:
        self.nodes.append(TapeNode(out.shape, tuple(parents), backward, op))
        out.requires_grad = True
        out.tape_id = len(self.nodes) - 1
        out._tape = self
        return out

    def backward(self, loss: Tensor) -> Gradients:
        if loss.size != 1:
            raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
        grads = Gradients()
        if loss.tape_id is None or not loss.tracked_by(self):
            return grads

        pending: dict[int, np.ndarray] = {loss.tape_id: np.ones(loss.shape)}
        for node_id in range(loss.tape_id, -1, -1):
            upstream = pending.pop(node_id, None)
            if upstream is None:
                continue
            node = self.nodes[node_id]
            self.visits += 1
            parent_grads = node.backward(upstream)
            for parent, grad in zip(node.parents, parent_grads):
                if grad is None:
                    continue
                if grad.shape != parent.shape:
                    raise ShapeError(
                        f"{node.op}: gradient shape {grad.shape} does not match input {parent.shape}"
                    )
                if parent.tracked_by(self):
                    if parent.tape_id in pending:
                        pending[parent.tape_id] = pending[parent.tape_id] + grad
                    else:
                        pending[parent.tape_id] = grad
                elif parent.requires_grad and parent.tape_id is None:
                    grads._accumulate(parent, grad)
        return grads


def backward(tape: Tape, loss: Tensor) -> Gradients:
    return tape.backward(loss)
