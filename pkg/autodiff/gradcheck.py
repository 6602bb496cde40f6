"""
Finite-difference gradient checker for the tape.
"""
from typing import Callable, Sequence

import numpy as np

from autodiff.tensor import Tape, Tensor, no_grad_tape
from utils.errors import NumericError


def _value(f: Callable[[], Tensor]) -> float:
    with no_grad_tape():
        out = f().item()
    if not np.isfinite(out):
        raise NumericError("non-finite value during grad_check")
    return out


def grad_check(f: Callable[[], Tensor], leaves: Sequence[Tensor], h: float = 1e-5) -> float:
    """
    Compares tape gradients against central differences.

    Args:
        f: zero-argument callable building a scalar from ``leaves``.
        leaves: tensors whose gradients are checked; requires_grad is
            restored afterwards.
        h: finite-difference step.

    Returns:
        max over entries of |analytic - numeric| / max(1, |analytic|, |numeric|).
    """
    flags = [leaf.requires_grad for leaf in leaves]
    try:
        for leaf in leaves:
            leaf.requires_grad = True
            leaf.zero_grad()
        with Tape() as tape:
            out = f()
        tape.backward(out)
        analytic = [np.zeros_like(leaf.data) if leaf.grad is None else leaf.grad.copy() for leaf in leaves]
    finally:
        for leaf, flag in zip(leaves, flags):
            leaf.requires_grad = flag

    worst = 0.0
    for leaf, grad in zip(leaves, analytic):
        leaf.data = np.ascontiguousarray(leaf.data)
        flat = leaf.data.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            plus = _value(f)
            flat[i] = orig - h
            minus = _value(f)
            flat[i] = orig
            numeric = (plus - minus) / (2.0 * h)
            err = abs(gflat[i] - numeric) / max(1.0, abs(gflat[i]), abs(numeric))
            worst = max(worst, err)
    return worst
