"""
Attention building blocks: the concat score function, alignment softmaxes,
context vector, focus tracking, position penalty, penalty strength, the
closed-form vision span and the Local Attention (local-p) pieces.

Positions are 0-based throughout.
"""
import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from autodiff import ops
from autodiff.tensor import Tensor
from network.params import ModelParams
from network.seq2seq import EncoderStates
from utils.errors import ShapeError

Positions = Union[float, int, np.ndarray]


class ScoreMeter:
    """Counts score-function evaluations actually performed."""

    def __init__(self):
        self.count = 0

    def add(self, n: int) -> None:
        self.count += int(n)

    def merge(self, other: "ScoreMeter") -> None:
        self.count += other.count


# === Score function ===

def score(h_prev: Tensor, h_bar_s: Tensor, params: ModelParams) -> Tensor:
    """v_aᵀ tanh(W_a [h_{t-1}; h̄_s]) for one encoder position; returns [B × 1]."""
    W_a, v_a = params["att_W_a"], params["att_v_a"]
    if h_prev.shape[-1] + h_bar_s.shape[-1] != W_a.shape[0]:
        raise ShapeError(f"score inputs {h_prev.dims} and {h_bar_s.dims} do not fit W_a {W_a.dims}")
    return ops.matmul(ops.tanh(ops.matmul(ops.concat([h_prev, h_bar_s], axis=-1), W_a)), v_a)


def encoder_projection(enc: EncoderStates, params: ModelParams) -> Tensor:
    """Per-sentence cache of the encoder block of W_a applied to every h̄_s."""
    if enc.score_cache is None:
        W_a = params["att_W_a"]
        dec_dim = W_a.shape[0] - enc.states.shape[-1]
        enc.score_cache = ops.matmul(enc.states, ops.slice_axis(W_a, dec_dim, W_a.shape[0], axis=0))
    return enc.score_cache


def score_window(
    h_prev: Tensor,
    enc: EncoderStates,
    lo: int,
    hi: int,
    params: ModelParams,
    meter: Optional[ScoreMeter] = None,
) -> Tensor:
    """Scores for positions lo..hi only, using the cached encoder projection; [B × (hi-lo+1)]."""
    W_a, v_a = params["att_W_a"], params["att_v_a"]
    B, H = h_prev.shape
    width = hi - lo + 1
    proj = ops.slice_axis(encoder_projection(enc, params), lo, hi + 1, axis=1)
    query = ops.reshape(ops.matmul(h_prev, ops.slice_axis(W_a, 0, H, axis=0)), (B, 1, W_a.shape[1]))
    scores = ops.matmul(ops.tanh(ops.add(proj, query)), v_a)
    if meter is not None:
        meter.add(B * width)
    return ops.reshape(scores, (B, width))


# === Alignment ===

def _logits(x) -> Tensor:
    t = ops.as_tensor(x)
    return t if t.ndim > 1 else ops.reshape(t, (1, t.shape[0]))


def global_alignment(scores, mask: Optional[np.ndarray] = None) -> Tensor:
    """Softmax of the scores over all (unmasked) positions."""
    scores = _logits(scores)
    if mask is None:
        mask = np.ones(scores.shape, dtype=bool)
    return ops.softmax_masked(scores, mask)


def flexible_alignment(scores, penalties, mask: Optional[np.ndarray] = None) -> Tensor:
    """Softmax of (score − penalty) restricted to ``mask``."""
    scores, penalties = _logits(scores), _logits(penalties)
    if scores.shape[-1] != penalties.shape[-1]:
        raise ShapeError(f"scores {scores.dims} and penalties {penalties.dims} differ in length")
    if mask is None:
        mask = np.ones(scores.shape, dtype=bool)
    return ops.softmax_masked(ops.sub(scores, penalties), np.asarray(mask, dtype=bool).reshape(scores.shape))


def context_vector(weights: Tensor, states: Union[EncoderStates, Tensor]) -> Tensor:
    """c_t = Σ_s a_t(s) h̄_s; weights [B × S], states [B × S × D] -> [B × D]."""
    states = states.states if isinstance(states, EncoderStates) else states
    weights = _logits(weights)
    if states.ndim == 2:
        states = ops.reshape(states, (1,) + states.shape)
    B, S = weights.shape
    if states.shape[1] != S or states.shape[0] != B:
        raise ShapeError(f"weights {weights.dims} do not match encoder states {states.dims}")
    out = ops.matmul(ops.reshape(weights, (B, 1, S)), states)
    return ops.reshape(out, (B, states.shape[2]))


def attention_center(weights, offset: int = 0) -> Tensor:
    """p_t = Σ_s a_t(s)·s; ``offset`` is the position of the first weight. Returns [B × 1]."""
    weights = _logits(weights)
    positions = ops.constant(np.arange(offset, offset + weights.shape[-1], dtype=float).reshape(-1, 1))
    return ops.matmul(weights, positions)


# === Position penalty ===

def distance(s: Positions, p_prev: Positions, sigma: float) -> Positions:
    """(s − p_prev)² / (2σ²)."""
    return (np.asarray(s, dtype=float) - p_prev) ** 2 / (2.0 * sigma * sigma)


def distance_tensor(positions: np.ndarray, p_prev: Tensor, sigma: float) -> Tensor:
    """Differentiable distance of every position from a tracked focus; [B × len(positions)]."""
    diff = ops.sub(ops.constant(np.asarray(positions, dtype=float).reshape(1, -1)), p_prev)
    return ops.scale(ops.mul(diff, diff), 1.0 / (2.0 * sigma * sigma))


def penalty_strength(h_prev: Tensor, i_t: Tensor, params: ModelParams) -> Tensor:
    """g(t) = sigmoid(v_gᵀ tanh(W_g [h_{t-1}; i_t]) + b_g); returns [B × 1]."""
    W_g = params["str_W_g"]
    if h_prev.shape[-1] + i_t.shape[-1] != W_g.shape[0]:
        raise ShapeError(f"strength inputs {h_prev.dims} and {i_t.dims} do not fit W_g {W_g.dims}")
    hidden = ops.tanh(ops.matmul(ops.concat([h_prev, i_t], axis=-1), W_g))
    return ops.sigmoid(ops.add(ops.matmul(hidden, params["str_v_g"]), params["str_b_g"]))


def vision_span(p_prev: float, g: float, sigma: float, tau: float, S: int) -> Tuple[int, int]:
    """
    Integer window of positions whose penalty g·d(s, p_prev) is below tau.

    The open interval (p_prev − r, p_prev + r) with r = σ√(2τ/g) is clamped to
    [0, S−1]; an empty window falls back to the position nearest p_prev.
    """
    if math.isinf(tau) or g <= 0.0:
        return 0, S - 1
    r = sigma * math.sqrt(2.0 * tau / g)
    lo = max(0, math.floor(p_prev - r) + 1)
    hi = min(S - 1, math.ceil(p_prev + r) - 1)
    if lo > hi:
        nearest = min(S - 1, max(0, math.floor(p_prev + 0.5)))
        return nearest, nearest
    return lo, hi


# === Local Attention (local-p) ===

def local_p_center(h_t: Tensor, S, params: ModelParams) -> Tensor:
    """p_t = S · sigmoid(v_pᵀ tanh(W_p h_t)); S is a scalar or a [B × 1] array of lengths."""
    W_p = params["loc_W_p"]
    if h_t.shape[-1] != W_p.shape[0]:
        raise ShapeError(f"hidden {h_t.dims} does not fit W_p {W_p.dims}")
    gate = ops.sigmoid(ops.matmul(ops.tanh(ops.matmul(h_t, W_p)), params["loc_v_p"]))
    return ops.mul(gate, ops.constant(np.asarray(S, dtype=float).reshape(-1, 1)))


def local_window(p_t: float, D: int, S: int) -> Tuple[int, int]:
    """[p_t − D, p_t + D] on integer positions, clipped to [0, S−1]."""
    lo = max(0, math.ceil(p_t - D))
    hi = min(S - 1, math.floor(p_t + D))
    if lo > hi:
        nearest = min(S - 1, max(0, math.floor(p_t + 0.5)))
        return nearest, nearest
    return lo, hi


def local_alignment(scores, p_t, D: int, S: Union[int, Sequence[int]], mask: Optional[np.ndarray] = None) -> Tensor:
    """
    Softmax over all positions times exp(−(s−p_t)²/(2σ²)) with σ = D/2, zero
    outside [p_t−D, p_t+D]. The result is deliberately not renormalised.
    """
    scores = _logits(scores)
    B, n = scores.shape
    p_t = ops.as_tensor(p_t)
    p_t = p_t if p_t.ndim > 1 else ops.reshape(p_t, (B, 1))
    lengths = np.broadcast_to(np.asarray(S, dtype=np.int64).reshape(-1), (B,))
    if mask is None:
        mask = np.arange(n)[None, :] < lengths[:, None]
    softmax = ops.softmax_masked(scores, mask)
    sigma = D / 2.0
    gauss = ops.exp(ops.neg(distance_tensor(np.arange(n), p_t, sigma)))
    window = np.zeros((B, n))
    for b in range(B):
        lo, hi = local_window(float(p_t.data[b, 0]), D, int(lengths[b]))
        window[b, lo:hi + 1] = 1.0
    return ops.mul(ops.mul(softmax, gauss), ops.constant(window))
