"""Dense-tensor reverse-mode automatic differentiation.

Each operation returns a new Tensor holding parent references and a closure
that, given the output gradient, accumulates gradients into its parents.
backward() materializes the recorded graph as a ComputationTape (reverse
topological order) and runs the accumulation once; running the same tape
twice is an error.

Only the operations the pipeline needs are provided; broadcasting is
limited to numpy semantics on elementwise ops with gradients summed back
to the parent shapes.
"""

from __future__ import annotations

import numpy as np

from .errors import NonScalarLoss, ShapeMismatch, TapeConsumed


class Tensor:
    """N-dimensional value participating in reverse-mode differentiation."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn", "_done")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float64)
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward_fn = None
        self._done = False

    # -- introspection ------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # -- gradient plumbing --------------------------------------------
    def accumulate_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    # -- operator sugar -------------------------------------------------
    def __add__(self, other):
        return add(self, as_tensor(other, self.dtype))

    def __radd__(self, other):
        return add(as_tensor(other, self.dtype), self)

    def __sub__(self, other):
        return sub(self, as_tensor(other, self.dtype))

    def __mul__(self, other):
        return mul(self, as_tensor(other, self.dtype))

    def __rmul__(self, other):
        return mul(as_tensor(other, self.dtype), self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(value, dtype=None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=dtype))


def _make(data: np.ndarray, parents: tuple[Tensor, ...], backward_fn) -> Tensor:
    """Wire up a graph node; nodes whose parents are all constant record
    nothing and act as constants themselves."""
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward_fn = backward_fn
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcasted gradient back down to the parent shape."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


class ComputationTape:
    """Recorded operations of one backward pass, in reverse topological
    order; gradient accumulation is additive."""

    def __init__(self, nodes: list[Tensor]):
        self.nodes = nodes

    @classmethod
    def trace(cls, root: Tensor) -> "ComputationTape":
        order: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        order.reverse()  # children before parents
        return cls(order)

    def run(self, seed_grad: np.ndarray) -> None:
        self.nodes[0].accumulate_grad(seed_grad)
        for node in self.nodes:
            if node._backward_fn is not None and node.grad is not None:
                node._backward_fn(node.grad)
            node._done = True


def backward(loss: Tensor) -> None:
    """Populate .grad on every requires_grad tensor reachable from loss."""
    if loss.size != 1:
        raise NonScalarLoss(f"loss has shape {loss.shape}; expected a scalar")
    if loss._done:
        raise TapeConsumed("backward() already ran on this graph")
    if not loss.requires_grad:
        loss._done = True
        return
    tape = ComputationTape.trace(loss)
    tape.run(np.ones_like(loss.data))


# --- elementwise and shape operations ----------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    data = a.data + b.data

    def backward_fn(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g, b.shape))

    return _make(data, (a, b), backward_fn)


def sub(a: Tensor, b: Tensor) -> Tensor:
    data = a.data - b.data

    def backward_fn(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(-g, b.shape))

    return _make(data, (a, b), backward_fn)


def mul(a: Tensor, b: Tensor) -> Tensor:
    data = a.data * b.data

    def backward_fn(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g * a.data, b.shape))

    return _make(data, (a, b), backward_fn)


def neg(a: Tensor) -> Tensor:
    return _make(-a.data, (a,), lambda g: a.accumulate_grad(-g))


def power(a: Tensor, exponent: float) -> Tensor:
    data = a.data**exponent

    def backward_fn(g):
        a.accumulate_grad(g * exponent * a.data ** (exponent - 1))

    return _make(data, (a,), backward_fn)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """2-D (and batched 3-D) matrix product with numpy matmul semantics."""
    try:
        data = np.matmul(a.data, b.data)
    except ValueError as err:
        raise ShapeMismatch(f"matmul {a.shape} @ {b.shape}: {err}") from None

    def backward_fn(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(ga, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(gb, b.shape))

    return _make(data, (a, b), backward_fn)


def relu(a: Tensor) -> Tensor:
    data = np.maximum(a.data, 0)

    def backward_fn(g):
        a.accumulate_grad(g * (a.data > 0))

    return _make(data, (a,), backward_fn)


def tanh(a: Tensor) -> Tensor:
    data = np.tanh(a.data)

    def backward_fn(g):
        a.accumulate_grad(g * (1 - data * data))

    return _make(data, (a,), backward_fn)


def sigmoid(a: Tensor) -> Tensor:
    data = 1.0 / (1.0 + np.exp(-a.data))

    def backward_fn(g):
        a.accumulate_grad(g * data * (1 - data))

    return _make(data, (a,), backward_fn)


def exp(a: Tensor) -> Tensor:
    data = np.exp(a.data)

    def backward_fn(g):
        a.accumulate_grad(g * data)

    return _make(data, (a,), backward_fn)


def log(a: Tensor) -> Tensor:
    data = np.log(a.data)

    def backward_fn(g):
        a.accumulate_grad(g / a.data)

    return _make(data, (a,), backward_fn)


def tensor_sum(a: Tensor, axis=None) -> Tensor:
    data = a.data.sum(axis=axis)

    def backward_fn(g):
        if axis is None:
            a.accumulate_grad(np.broadcast_to(g, a.shape).copy())
        else:
            a.accumulate_grad(np.broadcast_to(np.expand_dims(g, axis), a.shape).copy())

    return _make(data, (a,), backward_fn)


def tensor_mean(a: Tensor, axis=None) -> Tensor:
    if axis is None:
        count = a.size
    else:
        count = a.shape[axis]
    out = tensor_sum(a, axis=axis)
    return mul(out, as_tensor(np.asarray(1.0 / count, dtype=a.dtype)))


def reshape(a: Tensor, shape) -> Tensor:
    data = a.data.reshape(shape)

    def backward_fn(g):
        a.accumulate_grad(g.reshape(a.shape))

    return _make(data, (a,), backward_fn)


def concat(tensors: list[Tensor], axis: int = -1) -> Tensor:
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward_fn(g):
        for t, start, stop in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(start, stop)
                t.accumulate_grad(g[tuple(idx)])

    return _make(data, tuple(tensors), backward_fn)


def stack(tensors: list[Tensor], axis: int = 0) -> Tensor:
    data = np.stack([t.data for t in tensors], axis=axis)

    def backward_fn(g):
        for i, t in enumerate(tensors):
            if t.requires_grad:
                t.accumulate_grad(np.take(g, i, axis=axis))

    return _make(data, tuple(tensors), backward_fn)


def slice_axis(a: Tensor, axis: int, start: int, length: int) -> Tensor:
    idx = [slice(None)] * a.data.ndim
    idx[axis] = slice(start, start + length)
    idx = tuple(idx)
    data = a.data[idx]

    def backward_fn(g):
        full = np.zeros_like(a.data)
        full[idx] = g
        a.accumulate_grad(full)

    return _make(data, (a,), backward_fn)


def zero_grads(params) -> None:
    """Clear gradients on a dict or iterable of tensors."""
    values = params.values() if hasattr(params, "values") else params
    for p in values:
        p.zero_grad()
