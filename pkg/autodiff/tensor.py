"""
Dense tensors with tape-based reverse-mode differentiation.

A Tape records every primitive applied to tensors that require gradients
while the tape is active (``with Tape() as tape:``). ``tape.backward(out)``
replays the records in exact reverse order, accumulating into ``.grad``.
Outside an active tape no graph is recorded (inference mode).
"""
from contextvars import ContextVar
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from autodiff.precision import get_dtype
from utils.errors import NumericError, ShapeError

_active_tape: ContextVar[Optional["Tape"]] = ContextVar("active_tape", default=None)


class Tensor:
    """n-dimensional real array participating in a recorded computation graph."""

    __slots__ = ("data", "grad", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None, dtype=None):
        self.data = np.array(data, dtype=dtype or get_dtype())
        if self.data.ndim == 0:
            self.data = self.data.reshape(1)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name

    @property
    def dims(self) -> List[int]:
        return list(self.data.shape)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single value, tensor has dims {self.dims}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate(self, g: np.ndarray) -> None:
        if g.shape != self.data.shape:
            raise ShapeError(f"gradient dims {list(g.shape)} do not match tensor dims {self.dims}")
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    # Operator sugar; the primitives live in autodiff.ops
    def __add__(self, other):
        from autodiff import ops
        return ops.add(self, ops.as_tensor(other))

    def __radd__(self, other):
        from autodiff import ops
        return ops.add(ops.as_tensor(other), self)

    def __sub__(self, other):
        from autodiff import ops
        return ops.sub(self, ops.as_tensor(other))

    def __rsub__(self, other):
        from autodiff import ops
        return ops.sub(ops.as_tensor(other), self)

    def __mul__(self, other):
        from autodiff import ops
        return ops.mul(self, ops.as_tensor(other))

    def __rmul__(self, other):
        from autodiff import ops
        return ops.mul(ops.as_tensor(other), self)

    def __neg__(self):
        from autodiff import ops
        return ops.neg(self)

    def __matmul__(self, other):
        from autodiff import ops
        return ops.matmul(self, other)

    def __repr__(self) -> str:
        label = f" '{self.name}'" if self.name else ""
        return f"<Tensor{label} dims={self.dims} requires_grad={self.requires_grad}>"


class TapeRecord:
    __slots__ = ("op", "result", "parents", "backward")

    def __init__(self, op: str, result: Tensor, parents: Sequence[Tensor], backward: Callable[[np.ndarray], None]):
        self.op = op
        self.result = result
        self.parents = parents
        self.backward = backward


class Tape:
    """Ordered record of primitive operations for one logical execution stream."""

    def __init__(self):
        self.records: List[TapeRecord] = []
        self._token = None

    def __enter__(self) -> "Tape":
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        _active_tape.reset(self._token)
        self._token = None

    def record(self, op: str, result: Tensor, parents: Sequence[Tensor], backward: Callable[[np.ndarray], None]) -> None:
        self.records.append(TapeRecord(op, result, parents, backward))

    def backward(self, output: Tensor) -> None:
        """Seeds d(output)/d(output) = 1 and replays the tape in reverse."""
        if output.data.size != 1:
            raise ShapeError(f"backward() needs a scalar output, got dims {output.dims}")
        output.accumulate(np.ones_like(output.data))
        for rec in reversed(self.records):
            if rec.result.grad is None:
                continue
            if not np.all(np.isfinite(rec.result.grad)):
                raise NumericError(rec.op, "non-finite gradient")
            rec.backward(rec.result.grad)

    def __len__(self) -> int:
        return len(self.records)


def active_tape() -> Optional[Tape]:
    return _active_tape.get()


def no_grad_tape():
    """Context that suspends recording (used by finite-difference checks)."""
    return _Suspend()


class _Suspend:
    def __enter__(self):
        self._token = _active_tape.set(None)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        _active_tape.reset(self._token)
