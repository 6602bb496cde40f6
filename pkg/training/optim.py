"""
Adam, global-norm gradient clipping and the step-halving learning rate.
"""
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from models import TrainConfig
from network.params import ModelParams
from utils.errors import ShapeError

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


@dataclass
class AdamState:
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    @classmethod
    def for_params(cls, params: ModelParams) -> "AdamState":
        return cls(
            m={n: np.zeros_like(t.data) for n, t in params.items()},
            v={n: np.zeros_like(t.data) for n, t in params.items()},
        )

    def extras(self) -> Dict[str, np.ndarray]:
        """Moments as named arrays for the checkpoint file."""
        out = {f"opt.m.{n}": a for n, a in self.m.items()}
        out.update({f"opt.v.{n}": a for n, a in self.v.items()})
        return out

    @classmethod
    def from_extras(cls, extras: Dict[str, np.ndarray], step: int) -> "AdamState":
        m = {k[len("opt.m."):]: a for k, a in extras.items() if k.startswith("opt.m.")}
        v = {k[len("opt.v."):]: a for k, a in extras.items() if k.startswith("opt.v.")}
        return cls(m=m, v=v, step=step)


def adam_step(params: ModelParams, grads: Dict[str, np.ndarray], state: AdamState, lr: float) -> AdamState:
    """Bias-corrected Adam update, applied in place."""
    state.step += 1
    t = state.step
    correction1 = 1.0 - BETA1 ** t
    correction2 = 1.0 - BETA2 ** t
    for name, tensor in params.items():
        g = grads[name]
        if g.shape != tensor.shape or state.m[name].shape != tensor.shape:
            raise ShapeError(f"'{name}': gradient {list(g.shape)} vs parameter {tensor.dims}")
        m = state.m[name] = BETA1 * state.m[name] + (1.0 - BETA1) * g
        v = state.v[name] = BETA2 * state.v[name] + (1.0 - BETA2) * g * g
        update = lr * (m / correction1) / (np.sqrt(v / correction2) + EPSILON)
        tensor.data = (tensor.data - update).astype(tensor.data.dtype, copy=False)
    return state


def global_norm(grads: Dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_gradients(grads: Dict[str, np.ndarray], clip_norm: float) -> Tuple[Dict[str, np.ndarray], float]:
    """Rescales every gradient by clip_norm / norm when the global L2 norm exceeds clip_norm."""
    norm = global_norm(grads)
    if norm <= clip_norm:
        return grads, norm
    factor = clip_norm / norm
    return {name: g * factor for name, g in grads.items()}, norm


def learning_rate_for_epoch(config: TrainConfig, epoch: int) -> float:
    """1-based epochs; the rate halves at the start of every epoch from ``halve_from_epoch`` on."""
    return config.lr * 0.5 ** max(0, epoch - config.halve_from_epoch + 1)
