"""
Beam search and greedy decoding with vision-span metering.

Active hypotheses of one sentence are decoded as one batch of rows; each
hypothesis carries its own previous focus. Ties between equal scores go to
the lower token id, then to the earlier hypothesis. Scores are plain summed
log-probabilities (no length normalisation). For beams wider than one the
greedy path is decoded as well and returned when it scores higher.
"""
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from attention import AttentionQuery, ScoreMeter, build_attention
from attention.functions import encoder_projection
from autodiff import ops
from decoding.metering import Stopwatch
from models import EOS_ID, AttentionStep, DecodeTrace, ModelConfig
from network.params import ModelParams
from network.seq2seq import DecoderState, decoder_step, embed_feedback, encode, initial_decoder_state, output_logits
from utils.errors import LengthError


@dataclass
class Hypothesis:
    tokens: List[int]
    log_prob: float
    state: DecoderState
    p_prev: Optional[float] = None
    steps: List[AttentionStep] = field(default_factory=list)

    @property
    def finished(self) -> bool:
        return bool(self.tokens) and self.tokens[-1] == EOS_ID

    def output(self) -> List[int]:
        return self.tokens[:-1] if self.finished else list(self.tokens)


def default_max_out(source_length: int) -> int:
    return 2 * source_length + 5


def _row_state(state: DecoderState, i: int, feedback) -> DecoderState:
    return DecoderState(
        ops.slice_axis(state.h, i, i + 1, axis=0),
        ops.slice_axis(state.c, i, i + 1, axis=0),
        feedback,
    )


def _stack_states(hyps: Sequence[Hypothesis]) -> DecoderState:
    if len(hyps) == 1:
        return hyps[0].state
    return DecoderState(
        ops.concat([h.state.h for h in hyps], axis=0),
        ops.concat([h.state.c for h in hyps], axis=0),
        ops.concat([h.state.feedback for h in hyps], axis=0),
    )


def _select(scores: np.ndarray, k: int):
    """Top-k (row, token) pairs by score; ties -> lower token id, then lower row."""
    rows, tokens = np.indices(scores.shape)
    order = np.lexsort((rows.ravel(), tokens.ravel(), -scores.ravel()))[:k]
    return [(int(rows.ravel()[j]), int(tokens.ravel()[j])) for j in order]


def beam_search(
    source: Sequence[int],
    params: ModelParams,
    config: ModelConfig,
    beam: int = 5,
    tau: float = math.inf,
    max_out: Optional[int] = None,
    meter: Optional[ScoreMeter] = None,
) -> DecodeTrace:
    """
    Decodes one sentence.

    Returns the best completed hypothesis (best partial one when none
    completed, greedy when it scores higher) with the windows of every
    hypothesis at every step.
    """
    if len(source) == 0:
        raise LengthError("source sequence is empty")
    if beam < 1:
        raise ValueError("beam must be >= 1")
    max_out = max_out or default_max_out(len(source))
    mechanism = build_attention(config)
    hyp_widths: List[List[int]] = []
    evals = 0

    with Stopwatch() as watch:
        enc = encode(source, params, config)
        encoder_projection(enc, params)
        active = [Hypothesis([], 0.0, initial_decoder_state(1, params, config))]
        completed: List[Hypothesis] = []
        for step in range(1, max_out + 1):
            n = len(active)
            state = _stack_states(active)
            p_prev = None if step == 1 else ops.constant(np.array([[h.p_prev] for h in active]))
            out = mechanism.attend(
                AttentionQuery(state.h, state.feedback, enc.tile(n), p_prev, step),
                params, tau=tau, meter=meter, record=True,
            )
            state = decoder_step(state, out.context, params)
            log_probs = ops.log_softmax(output_logits(state, params)).data
            hyp_widths.append([r.width for r in out.records])
            evals += sum(r.score_evals for r in out.records)

            scores = np.array([h.log_prob for h in active])[:, None] + log_probs
            chosen = _select(scores, beam - len(completed))
            feedback = embed_feedback([token for _, token in chosen], params)
            survivors = []
            for j, (i, token) in enumerate(chosen):
                hyp = Hypothesis(
                    tokens=active[i].tokens + [token],
                    log_prob=float(scores[i, token]),
                    state=_row_state(state, i, ops.slice_axis(feedback, j, j + 1, axis=0)),
                    p_prev=float(out.focus.data[i, 0]),
                    steps=active[i].steps + [out.records[i]],
                )
                (completed if token == EOS_ID else survivors).append(hyp)
            active = survivors
            if not active:
                break

    pool = completed or active
    best = max(pool, key=lambda h: h.log_prob)
    trace = DecodeTrace(
        tokens=best.output(),
        log_prob=best.log_prob,
        source_length=len(source),
        steps=best.steps,
        hyp_widths=hyp_widths,
        score_evals=evals,
        duration_s=watch.elapsed,
    )
    if beam == 1:
        return trace
    return _keep_greedy(trace, greedy(source, params, config, tau=tau, max_out=max_out, meter=meter))


def _keep_greedy(trace: DecodeTrace, fallback: DecodeTrace) -> DecodeTrace:
    """
    Pruning can drop the greedy prefix, so the greedy path runs alongside the
    beam and wins when it scores strictly higher. Its windows and score
    evaluations count as one more hypothesis per step.
    """
    widths = [list(ws) for ws in trace.hyp_widths]
    for t, ws in enumerate(fallback.hyp_widths):
        if t < len(widths):
            widths[t].extend(ws)
        else:
            widths.append(list(ws))
    best = fallback if fallback.log_prob > trace.log_prob else trace
    return best.model_copy(update={
        "hyp_widths": widths,
        "score_evals": trace.score_evals + fallback.score_evals,
        "duration_s": trace.duration_s + fallback.duration_s,
    })


def greedy(
    source: Sequence[int],
    params: ModelParams,
    config: ModelConfig,
    tau: float = math.inf,
    max_out: Optional[int] = None,
    meter: Optional[ScoreMeter] = None,
) -> DecodeTrace:
    """Argmax decoding of one sentence."""
    if len(source) == 0:
        raise LengthError("source sequence is empty")
    max_out = max_out or default_max_out(len(source))
    mechanism = build_attention(config)
    tokens: List[int] = []
    steps: List[AttentionStep] = []
    log_prob = 0.0

    with Stopwatch() as watch:
        enc = encode(source, params, config)
        encoder_projection(enc, params)
        state = initial_decoder_state(1, params, config)
        p_prev = None
        for step in range(1, max_out + 1):
            out = mechanism.attend(
                AttentionQuery(state.h, state.feedback, enc, p_prev, step),
                params, tau=tau, meter=meter, record=True,
            )
            state = decoder_step(state, out.context, params)
            log_probs = ops.log_softmax(output_logits(state, params)).data[0]
            token = int(np.argmax(log_probs))
            log_prob += float(log_probs[token])
            tokens.append(token)
            steps.extend(out.records)
            p_prev = out.focus
            state = DecoderState(state.h, state.c, embed_feedback([token], params))
            if token == EOS_ID:
                break

    return DecodeTrace(
        tokens=tokens[:-1] if tokens[-1] == EOS_ID else tokens,
        log_prob=log_prob,
        source_length=len(source),
        steps=steps,
        hyp_widths=[[s.width] for s in steps],
        score_evals=sum(s.score_evals for s in steps),
        duration_s=watch.elapsed,
    )


def greedy_batch(
    sources: Sequence[Sequence[int]],
    params: ModelParams,
    config: ModelConfig,
    max_out: Optional[int] = None,
) -> List[List[int]]:
    """
    Full-window argmax decoding of many sentences at once (validation during
    training). Returns token lists without EOS.
    """
    lengths = [len(s) for s in sources]
    if not sources or min(lengths) == 0:
        raise LengthError("source sequence is empty")
    width = max(lengths)
    padded = np.zeros((len(sources), width), dtype=np.int64)
    for i, s in enumerate(sources):
        padded[i, :len(s)] = s
    max_out = max_out or default_max_out(width)

    mechanism = build_attention(config)
    enc = encode(padded, params, config, lengths)
    state = initial_decoder_state(len(sources), params, config)
    p_prev = None
    outputs: List[List[int]] = [[] for _ in sources]
    done = np.zeros(len(sources), dtype=bool)
    for step in range(1, max_out + 1):
        out = mechanism.attend(AttentionQuery(state.h, state.feedback, enc, p_prev, step), params)
        state = decoder_step(state, out.context, params)
        tokens = np.argmax(output_logits(state, params).data, axis=-1)
        for i, token in enumerate(tokens):
            if not done[i]:
                if token == EOS_ID:
                    done[i] = True
                else:
                    outputs[i].append(int(token))
        if done.all():
            break
        p_prev = out.focus
        state = DecoderState(state.h, state.c, embed_feedback(tokens, params))
    return outputs
