"""
Bidirectional LSTM encoder, attentional LSTM decoder step and output layer.

All tensors carry a leading batch axis: decoder vectors are [B × dim],
encoder states are [B × S × 2·hidden].
"""
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from autodiff import ops
from autodiff.tensor import Tensor
from models import BOS_ID, PAD_ID, ModelConfig
from network.lstm import lstm_cell
from network.params import ModelParams
from utils.errors import IdRangeError, LengthError, ShapeError


@dataclass
class EncoderStates:
    """Rows h̄_0..h̄_{S-1} per batch entry, with the padding mask."""
    states: Tensor
    lengths: np.ndarray
    mask: np.ndarray
    # per-sentence projection of the encoder block of W_a, filled on first use
    score_cache: Optional[Tensor] = field(default=None, repr=False)

    @property
    def length(self) -> int:
        return self.states.shape[1]

    @property
    def batch(self) -> int:
        return self.states.shape[0]

    def row(self, b: int) -> "EncoderStates":
        """Single-sentence view of batch entry ``b``, trimmed to its length."""
        n = int(self.lengths[b])
        states = ops.slice_axis(ops.slice_axis(self.states, b, b + 1, axis=0), 0, n, axis=1)
        cache = None
        if self.score_cache is not None:
            cache = ops.slice_axis(ops.slice_axis(self.score_cache, b, b + 1, axis=0), 0, n, axis=1)
        return EncoderStates(states, np.array([n]), np.ones((1, n), dtype=bool), cache)

    def tile(self, n: int) -> "EncoderStates":
        """Repeats a single-sentence encoding for ``n`` decoder rows (beam hypotheses)."""
        if self.batch != 1:
            raise ShapeError(f"tile expects one sentence, got batch {self.batch}")
        if n == 1:
            return self
        cache = None if self.score_cache is None else ops.concat([self.score_cache] * n, axis=0)
        return EncoderStates(
            ops.concat([self.states] * n, axis=0),
            np.repeat(self.lengths, n),
            np.repeat(self.mask, n, axis=0),
            cache,
        )


@dataclass
class DecoderState:
    """Decoder hidden h_t, cell c_t and the feedback embedding i_t for the next step."""
    h: Tensor
    c: Tensor
    feedback: Tensor


def _as_batch(tokens: Union[Sequence[int], np.ndarray], lengths: Optional[Sequence[int]]):
    arr = np.asarray(tokens, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr[None, :]
        lengths = [arr.shape[1]]
    elif lengths is None:
        lengths = [arr.shape[1]] * arr.shape[0]
    return arr, np.asarray(lengths, dtype=np.int64)


def encode(tokens, params: ModelParams, config: ModelConfig, lengths: Optional[Sequence[int]] = None) -> EncoderStates:
    """
    Runs the bidirectional encoder.

    Args:
        tokens: one id sequence, or a [B × S] padded id matrix.
        lengths: true lengths for a padded matrix.
    """
    ids, lengths = _as_batch(tokens, lengths)
    B, S = ids.shape
    if S == 0 or lengths.min() < 1:
        raise LengthError("source sequence is empty")
    if S > config.max_len:
        raise LengthError(f"source length {S} exceeds max_len {config.max_len}")
    mask = np.arange(S)[None, :] < lengths[:, None]
    valid = ids[mask]
    if valid.min() < 0 or valid.max() >= config.src_vocab:
        raise IdRangeError(f"source id outside [0, {config.src_vocab})")

    X = ops.take_rows(params["src_embed"], np.where(mask, ids, PAD_ID))
    H = config.hidden_dim
    zeros = ops.constant(np.zeros((B, H)))

    h, c = zeros, zeros
    forward = []
    for s in range(S):
        h, c = lstm_cell(ops.select(X, s, axis=1), h, c, params["enc_fwd_W"], params["enc_fwd_b"])
        forward.append(h)

    h, c = zeros, zeros
    backward = [None] * S
    for s in reversed(range(S)):
        hn, cn = lstm_cell(ops.select(X, s, axis=1), h, c, params["enc_bwd_W"], params["enc_bwd_b"])
        if mask[:, s].all():
            h, c = hn, cn
        else:
            # padded rows keep the zero state until their last real token
            m = ops.constant(mask[:, s:s + 1].astype(float))
            keep = ops.constant(1.0 - mask[:, s:s + 1].astype(float))
            h = ops.add(ops.mul(m, hn), ops.mul(keep, h))
            c = ops.add(ops.mul(m, cn), ops.mul(keep, c))
        backward[s] = h

    states = ops.concat([ops.stack(forward, axis=1), ops.stack(backward, axis=1)], axis=-1)
    return EncoderStates(states, lengths, mask)


def embed_feedback(ids: Sequence[int], params: ModelParams) -> Tensor:
    return ops.take_rows(params["tgt_embed"], np.asarray(ids, dtype=np.int64))


def initial_decoder_state(batch: int, params: ModelParams, config: ModelConfig) -> DecoderState:
    """Zero hidden and cell; the first feedback word is BOS."""
    zeros = ops.constant(np.zeros((batch, config.hidden_dim)))
    return DecoderState(zeros, zeros, embed_feedback([BOS_ID] * batch, params))


def decoder_step(prev: DecoderState, context: Tensor, params: ModelParams) -> DecoderState:
    """One LSTM transition on input [i_t; c_t]."""
    H = prev.h.shape[-1]
    if context.shape[-1] != 2 * H or context.shape[0] != prev.h.shape[0]:
        raise ShapeError(f"context dims {context.dims} do not match decoder hidden {prev.h.dims}")
    x = ops.concat([prev.feedback, context], axis=-1)
    h, c = lstm_cell(x, prev.h, prev.c, params["dec_W"], params["dec_b"])
    return DecoderState(h, c, prev.feedback)


def output_logits(state: DecoderState, params: ModelParams) -> Tensor:
    """hidden -> tanh pre-output layer -> vocabulary logits."""
    pre = ops.tanh(ops.add(ops.matmul(state.h, params["pre_W"]), params["pre_b"]))
    return ops.add(ops.matmul(pre, params["out_W"]), params["out_b"])
