"""
Differentiable primitives.

Each primitive computes its value with numpy, checks the result is finite,
and (when a tape is active and an operand requires gradients) records an
analytic backward rule that accumulates into the operands' ``.grad``.
"""
from typing import Callable, Optional, Sequence, Union

import numpy as np

from autodiff.precision import get_dtype
from autodiff.tensor import Tensor, active_tape
from utils.errors import DomainError, EmptyWindowError, IdRangeError, NumericError, ShapeError

ArrayLike = Union[Tensor, np.ndarray, float, int, Sequence[float]]


def as_tensor(x: ArrayLike) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def constant(x: ArrayLike) -> Tensor:
    """A tensor that never receives gradients."""
    return Tensor(x, requires_grad=False)


def _wrap(data: np.ndarray) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = np.asarray(data, dtype=get_dtype())
    out.grad = None
    out.requires_grad = False
    out.name = None
    return out


def _result(op: str, data: np.ndarray, parents: Sequence[Tensor], backward: Callable[[np.ndarray], None]) -> Tensor:
    if not np.all(np.isfinite(data)):
        raise NumericError(op)
    out = _wrap(data)
    tape = active_tape()
    if tape is not None and any(p.requires_grad for p in parents):
        out.requires_grad = True
        tape.record(op, out, parents, backward)
    return out


def _send(t: Tensor, g: np.ndarray) -> None:
    if t.requires_grad:
        t.accumulate(g)


def unbroadcast(g: np.ndarray, shape: Sequence[int]) -> np.ndarray:
    """Sums a broadcast gradient back down to ``shape``."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _check_broadcast(op: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: dims {a.dims} and {b.dims} are incompatible") from None


# === Binary elementwise ===

def add(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast("add", a, b)

    def backward(g):
        _send(a, unbroadcast(g, a.shape))
        _send(b, unbroadcast(g, b.shape))

    return _result("add", a.data + b.data, (a, b), backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast("sub", a, b)

    def backward(g):
        _send(a, unbroadcast(g, a.shape))
        _send(b, unbroadcast(-g, b.shape))

    return _result("sub", a.data - b.data, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast("mul", a, b)

    def backward(g):
        _send(a, unbroadcast(g * b.data, a.shape))
        _send(b, unbroadcast(g * a.data, b.shape))

    return _result("mul", a.data * b.data, (a, b), backward)


# === Unary elementwise ===

def neg(a: Tensor) -> Tensor:
    return _result("neg", -a.data, (a,), lambda g: _send(a, -g))


def scale(a: Tensor, k: float) -> Tensor:
    return _result("scale", a.data * k, (a,), lambda g: _send(a, g * k))


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    return _result("tanh", y, (a,), lambda g: _send(a, g * (1.0 - y * y)))


def sigmoid(a: Tensor) -> Tensor:
    # tanh form stays finite for large |x|
    y = 0.5 * (1.0 + np.tanh(0.5 * a.data))
    return _result("sigmoid", y, (a,), lambda g: _send(a, g * y * (1.0 - y)))


def exp(a: Tensor) -> Tensor:
    with np.errstate(over="ignore"):
        y = np.exp(a.data)
    return _result("exp", y, (a,), lambda g: _send(a, g * y))


def log(a: Tensor) -> Tensor:
    if np.any(a.data <= 0):
        raise DomainError(f"log of non-positive value (min {float(a.data.min())})")
    return _result("log", np.log(a.data), (a,), lambda g: _send(a, g / a.data))


_UNARY = {"tanh": tanh, "sigmoid": sigmoid, "exp": exp, "log": log, "neg": neg}
_BINARY = {"add": add, "mul": mul, "sub": sub}


def elementwise(f: str, *operands, k: Optional[float] = None) -> Tensor:
    """Dispatches a named pointwise primitive."""
    if f in _UNARY:
        (a,) = operands
        return _UNARY[f](as_tensor(a))
    if f in _BINARY:
        a, b = operands
        a, b = as_tensor(a), as_tensor(b)
        if a.shape != b.shape:
            raise ShapeError(f"{f}: operand dims {a.dims} and {b.dims} differ")
        return _BINARY[f](a, b)
    if f == "scale":
        (a,) = operands
        return scale(as_tensor(a), float(k))
    raise ValueError(f"Unknown elementwise function '{f}'")


# === Linear algebra ===

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """
    Matrix product. Supports [m×k]·[k×n], [...×m×k]·[k×n] (shared right
    operand) and batched [B×m×k]·[B×k×n].
    """
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs rank ≥ 2 operands, got dims {a.dims} and {b.dims}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul inner dims disagree: {a.dims} vs {b.dims}")
    if b.ndim == 2:
        data = a.data @ b.data
        k, n = b.shape

        def backward(g):
            _send(a, g @ b.data.T)
            if b.requires_grad:
                b.accumulate(a.data.reshape(-1, k).T @ g.reshape(-1, n))

        return _result("matmul", data, (a, b), backward)

    if a.ndim != 3 or b.ndim != 3 or a.shape[0] != b.shape[0]:
        raise ShapeError(f"batched matmul needs equal leading dims: {a.dims} vs {b.dims}")

    def backward_batched(g):
        _send(a, g @ np.swapaxes(b.data, 1, 2))
        _send(b, np.swapaxes(a.data, 1, 2) @ g)

    return _result("matmul", a.data @ b.data, (a, b), backward_batched)


# === Structural ===

def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    ref = tensors[0]
    ax = axis % ref.ndim
    for t in tensors[1:]:
        if t.ndim != ref.ndim or any(t.shape[i] != ref.shape[i] for i in range(ref.ndim) if i != ax):
            raise ShapeError(f"concat along axis {axis}: dims {ref.dims} and {t.dims} disagree")
    sizes = [t.shape[ax] for t in tensors]
    bounds = np.cumsum(sizes)[:-1]

    def backward(g):
        for t, part in zip(tensors, np.split(g, bounds, axis=ax)):
            _send(t, part)

    return _result("concat", np.concatenate([t.data for t in tensors], axis=ax), tensors, backward)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    data = np.stack([t.data for t in tensors], axis=axis)

    def backward(g):
        for i, t in enumerate(tensors):
            _send(t, np.take(g, i, axis=axis))

    return _result("stack", data, tensors, backward)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    return _result("reshape", a.data.reshape(shape), (a,), lambda g: _send(a, g.reshape(a.shape)))


def slice_axis(a: Tensor, start: int, stop: int, axis: int = -1) -> Tensor:
    index = [slice(None)] * a.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)

    def backward(g):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            full[index] = g
            a.accumulate(full)

    return _result("slice", a.data[index], (a,), backward)


def select(a: Tensor, i: int, axis: int = 0) -> Tensor:
    """Takes position ``i`` along ``axis``, dropping that axis."""

    def backward(g):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            index = [slice(None)] * a.ndim
            index[axis] = i
            full[tuple(index)] = g
            a.accumulate(full)

    return _result("select", np.take(a.data, i, axis=axis), (a,), backward)


def take_rows(table: Tensor, ids: np.ndarray) -> Tensor:
    """Embedding lookup: rows of ``table`` indexed by integer ``ids`` (any shape)."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        bad = int(ids.max()) if ids.max() >= table.shape[0] else int(ids.min())
        raise IdRangeError(f"id {bad} outside [0, {table.shape[0]})")

    def backward(g):
        if table.requires_grad:
            full = np.zeros_like(table.data)
            np.add.at(full, ids.reshape(-1), g.reshape(-1, table.shape[1]))
            table.accumulate(full)

    return _result("take_rows", table.data[ids], (table,), backward)


def pick(a: Tensor, ids: np.ndarray) -> Tensor:
    """Gathers one entry per row along the last axis: out[..., ] = a[..., ids[...]]."""
    ids = np.asarray(ids, dtype=np.int64)[..., None]

    def backward(g):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            np.put_along_axis(full, ids, g[..., None], axis=-1)
            a.accumulate(full)

    return _result("pick", np.take_along_axis(a.data, ids, axis=-1)[..., 0], (a,), backward)


# === Reductions and normalisers ===

def sum(a: Tensor, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    data = a.data.sum(axis=axis, keepdims=keepdims)
    kept = a.data.sum(axis=axis, keepdims=True).shape

    def backward(g):
        _send(a, np.broadcast_to(g.reshape(kept), a.shape).copy())

    return _result("sum", np.atleast_1d(data), (a,), backward)


def softmax_masked(logits: Tensor, mask: np.ndarray) -> Tensor:
    """
    Softmax over the last axis restricted to ``mask``; masked-out entries are
    exactly 0. Each row must keep at least one entry.
    """
    mask = np.broadcast_to(np.asarray(mask, dtype=bool), logits.shape)
    if not np.all(mask.any(axis=-1)):
        raise EmptyWindowError("softmax over an all-false mask")
    x = np.where(mask, logits.data, -np.inf)
    m = x.max(axis=-1, keepdims=True)
    e = np.where(mask, np.exp(x - m), 0.0)
    y = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        _send(logits, y * (g - (g * y).sum(axis=-1, keepdims=True)))

    return _result("softmax", y, (logits,), backward)


def softmax(logits: Tensor) -> Tensor:
    return softmax_masked(logits, np.ones(logits.shape, dtype=bool))


def log_softmax(logits: Tensor) -> Tensor:
    x = logits.data
    m = x.max(axis=-1, keepdims=True)
    lse = m + np.log(np.exp(x - m).sum(axis=-1, keepdims=True))
    y = x - lse

    def backward(g):
        _send(logits, g - np.exp(y) * g.sum(axis=-1, keepdims=True))

    return _result("log_softmax", y, (logits,), backward)
