"""
Global, Local (local-p) and Flexible attention.

Every mechanism takes a batch of decoder rows. Flexible attention has two
paths: with ``tau=None`` (training) all rows share one batched full-window
computation; with a threshold (``inf`` included) each row scores only the
positions inside its own vision span.
"""
from typing import List, Optional, Tuple

import numpy as np

from attention.base import AttentionMechanism, AttentionOutput, AttentionQuery
from attention.functions import (
    ScoreMeter,
    attention_center,
    context_vector,
    distance_tensor,
    encoder_projection,
    global_alignment,
    local_alignment,
    local_p_center,
    local_window,
    penalty_strength,
    score_window,
    vision_span,
)
from attention.registry import AttentionRegistry
from autodiff import ops
from autodiff.tensor import Tensor
from models import AttentionStep, ModelConfig, PenaltyConfig
from network.params import ModelParams
from network.seq2seq import EncoderStates


def _row(t: Tensor, b: int) -> Tensor:
    return ops.slice_axis(t, b, b + 1, axis=0)


def _step_record(step, lo, hi, S, weights, p, p_prev=None, g=None, score_evals=None) -> AttentionStep:
    full = np.zeros(S)
    full[lo:hi + 1] = np.asarray(weights, dtype=float).reshape(-1)[: hi - lo + 1]
    return AttentionStep(
        step=step,
        p_prev=p_prev,
        g=g,
        lo=lo,
        hi=hi,
        weights=full.tolist(),
        p=p,
        score_evals=hi - lo + 1 if score_evals is None else score_evals,
    )


@AttentionRegistry.register("global")
class GlobalAttention(AttentionMechanism):
    description = "Scores every source position at every step"

    def attend(self, query, params, tau=None, meter=None, record=False) -> AttentionOutput:
        enc = query.enc
        scores = score_window(query.h_prev, enc, 0, enc.length - 1, params, meter)
        weights = global_alignment(scores, enc.mask)
        focus = attention_center(weights)
        out = AttentionOutput(context_vector(weights, enc), focus=focus)
        if record:
            for b in range(enc.batch):
                n = int(enc.lengths[b])
                out.records.append(
                    _step_record(query.step, 0, n - 1, n, weights.data[b, :n], float(focus.data[b, 0]))
                )
        return out


@AttentionRegistry.register("local")
class LocalAttention(AttentionMechanism):
    """
    Predicted center from the previous decoder hidden state, softmax over all
    positions damped by a Gaussian of width D/2 and cut to [p−D, p+D].
    The weights are not renormalised.
    """
    description = "Predictive local attention with a fixed half-window"

    def attend(self, query, params, tau=None, meter=None, record=False) -> AttentionOutput:
        """The center is predicted from h_{t-1} rather than h_t, since input feeding makes h_t depend on c_t."""
        enc = query.enc
        D = self.config.local_half_window
        center = local_p_center(query.h_prev, enc.lengths, params)
        scores = score_window(query.h_prev, enc, 0, enc.length - 1, params, meter)
        weights = local_alignment(scores, center, D, enc.lengths, enc.mask)
        out = AttentionOutput(context_vector(weights, enc), focus=center)
        if record:
            for b in range(enc.batch):
                n = int(enc.lengths[b])
                p = float(center.data[b, 0])
                lo, hi = local_window(p, D, n)
                out.records.append(
                    _step_record(query.step, lo, hi, n, weights.data[b, lo:hi + 1], p, score_evals=n)
                )
        return out


@AttentionRegistry.register("flexible")
class FlexibleAttention(AttentionMechanism):
    """
    Tracked focus with a strength-scaled position penalty inside the softmax.

    The first step has no focus to track and runs unpenalised over the full
    window; its strength is still computed.
    """
    description = "Penalised attention with a dynamic vision span"

    def attend(self, query, params, tau=None, meter=None, record=False) -> AttentionOutput:
        g = penalty_strength(query.h_prev, query.feedback, params)
        if tau is None:
            return self._attend_full(query, g, params, meter, record)
        return self._attend_windowed(query, g, tau, params, meter, record)

    def _penalties(self, positions: np.ndarray, g: Tensor, p_prev: Tensor) -> Tensor:
        return ops.mul(g, distance_tensor(positions, p_prev, self.config.penalty_sigma))

    def _window(
        self,
        h_prev: Tensor,
        enc: EncoderStates,
        lo: int,
        hi: int,
        g: Tensor,
        p_prev: Optional[Tensor],
        mask: np.ndarray,
        params: ModelParams,
        meter: Optional[ScoreMeter],
    ) -> Tuple[Tensor, Tensor, Tensor]:
        """Weights, focus and context over positions lo..hi."""
        scores = score_window(h_prev, enc, lo, hi, params, meter)
        if p_prev is None:
            weights = global_alignment(scores, mask)
        else:
            penalties = self._penalties(np.arange(lo, hi + 1), g, p_prev)
            weights = ops.softmax_masked(ops.sub(scores, penalties), mask)
        focus = attention_center(weights, offset=lo)
        states = ops.slice_axis(enc.states, lo, hi + 1, axis=1)
        return weights, focus, context_vector(weights, states)

    def _attend_full(self, query, g, params, meter, record) -> AttentionOutput:
        enc = query.enc
        weights, focus, context = self._window(
            query.h_prev, enc, 0, enc.length - 1, g, query.p_prev, enc.mask, params, meter
        )
        out = AttentionOutput(context, focus=focus, strength=g)
        if record:
            for b in range(enc.batch):
                n = int(enc.lengths[b])
                out.records.append(_step_record(
                    query.step, 0, n - 1, n, weights.data[b, :n], float(focus.data[b, 0]),
                    p_prev=None if query.p_prev is None else float(query.p_prev.data[b, 0]),
                    g=float(g.data[b, 0]),
                ))
        return out

    def _attend_windowed(self, query, g, tau, params, meter, record) -> AttentionOutput:
        penalty = PenaltyConfig(sigma=self.config.penalty_sigma, tau=tau)
        enc = query.enc
        encoder_projection(enc, params)
        contexts: List[Tensor] = []
        focuses: List[Tensor] = []
        records: List[AttentionStep] = []
        for b in range(enc.batch):
            row = enc.row(b)
            n = row.length
            g_b = _row(g, b)
            p_b = None if query.p_prev is None else _row(query.p_prev, b)
            if p_b is None:
                lo, hi = 0, n - 1
            else:
                lo, hi = vision_span(float(p_b.data[0, 0]), float(g_b.data[0, 0]), penalty.sigma, penalty.tau, n)
            weights, focus, context = self._window(
                _row(query.h_prev, b), row, lo, hi, g_b, p_b, np.ones((1, hi - lo + 1), dtype=bool), params, meter
            )
            contexts.append(context)
            focuses.append(focus)
            if record:
                records.append(_step_record(
                    query.step, lo, hi, n, weights.data[0], float(focus.data[0, 0]),
                    p_prev=None if p_b is None else float(p_b.data[0, 0]),
                    g=float(g_b.data[0, 0]),
                ))
        if enc.batch == 1:
            return AttentionOutput(contexts[0], focuses[0], g, records)
        return AttentionOutput(ops.concat(contexts, axis=0), ops.concat(focuses, axis=0), g, records)


def flexible_attend(
    h_prev,
    i_t,
    enc: EncoderStates,
    p_prev: Optional[float],
    params: ModelParams,
    config: ModelConfig,
    tau: Optional[float] = None,
    step: int = 1,
    meter: Optional[ScoreMeter] = None,
) -> Tuple[Tensor, AttentionStep]:
    """
    One Flexible Attention step for a single sentence.

    ``tau=None`` is training mode (full window); any float is test mode, where
    ``math.inf`` keeps the full window. ``p_prev=None`` marks the first step.
    Returns the context vector [1 × 2H] and the step record.
    """
    h_prev, i_t = ops.as_tensor(h_prev), ops.as_tensor(i_t)
    if h_prev.ndim == 1:
        h_prev = ops.reshape(h_prev, (1, h_prev.shape[0]))
    if i_t.ndim == 1:
        i_t = ops.reshape(i_t, (1, i_t.shape[0]))
    focus = None if p_prev is None else ops.constant(np.array([[float(p_prev)]]))
    query = AttentionQuery(h_prev=h_prev, feedback=i_t, enc=enc, p_prev=focus, step=step)
    mechanism = FlexibleAttention(config)
    out = mechanism.attend(query, params, tau=tau, meter=meter, record=True)
    return out.context, out.records[0]

