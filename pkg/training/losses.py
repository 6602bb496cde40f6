"""
Reference-fed forward pass, cross-entropy and the strength-regularised
fine-tuning objective.

Reduction: token log-probabilities are summed within a sample and averaged
over the samples of a batch.
"""
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from attention import AttentionQuery, build_attention
from autodiff import ops
from autodiff.tensor import Tensor
from models import ModelConfig
from network.params import ModelParams
from network.seq2seq import DecoderState, decoder_step, embed_feedback, encode, initial_decoder_state, output_logits
from training.batching import Batch
from utils.errors import EmptyBatchError, UnsupportedModeError


@dataclass
class ForwardResult:
    nll: Tensor                  # [B] per-sample −Σ_t log p(y_t | y_<t, x)
    strengths: Optional[Tensor]  # [B × T] g(t), flexible models only
    mask: np.ndarray             # [B × T] real (non-PAD) target steps


def forward_batch(batch: Batch, params: ModelParams, config: ModelConfig) -> ForwardResult:
    if batch.size == 0:
        raise EmptyBatchError("batch holds no samples")
    mechanism = build_attention(config)
    enc = encode(batch.source, params, config, batch.source_lengths)
    state = initial_decoder_state(batch.size, params, config)
    mask = batch.loss_mask
    p_prev = None
    picked: List[Tensor] = []
    strengths: List[Tensor] = []
    for t in range(batch.target.shape[1]):
        out = mechanism.attend(AttentionQuery(state.h, state.feedback, enc, p_prev, step=t + 1), params)
        state = decoder_step(state, out.context, params)
        gold = batch.target[:, t]
        picked.append(ops.pick(ops.log_softmax(output_logits(state, params)), gold))
        if out.strength is not None:
            strengths.append(out.strength)
        p_prev = out.focus
        state = DecoderState(state.h, state.c, embed_feedback(gold, params))

    log_probs = ops.mul(ops.stack(picked, axis=1), ops.constant(mask.astype(float)))
    nll = ops.neg(ops.sum(log_probs, axis=1))
    g = ops.concat(strengths, axis=1) if strengths else None
    return ForwardResult(nll, g, mask)


def mean_over_batch(values: Tensor) -> Tensor:
    return ops.scale(ops.sum(values), 1.0 / values.shape[0])


def per_sample_strength(result: ForwardResult) -> Tensor:
    """(1/T_i) Σ_t g(t) for every sample; [B]."""
    steps = result.mask.sum(axis=1).astype(float)
    masked = ops.mul(result.strengths, ops.constant(result.mask.astype(float)))
    return ops.mul(ops.sum(masked, axis=1), ops.constant(1.0 / steps))


def cross_entropy(batch: Batch, params: ModelParams, config: ModelConfig) -> Tensor:
    return mean_over_batch(forward_batch(batch, params, config).nll)


def finetune_objective(nll: Tensor, mean_g: Tensor, beta: float) -> Tensor:
    """mean_i [ CE_i − β · mean_t g_i(t) ]."""
    return mean_over_batch(ops.sub(nll, ops.scale(mean_g, beta)))


def finetune_loss(batch: Batch, params: ModelParams, config: ModelConfig, beta: float = 0.1) -> Tensor:
    if config.attention_kind != "flexible":
        raise UnsupportedModeError(
            f"the strength-regularised loss needs a flexible model, got '{config.attention_kind}'"
        )
    result = forward_batch(batch, params, config)
    return finetune_objective(result.nll, per_sample_strength(result), beta)


def mean_strength(batches, params: ModelParams, config: ModelConfig) -> float:
    """Mean g(t) over every real target step of ``batches`` (reference-fed, no tape)."""
    if config.attention_kind != "flexible":
        raise UnsupportedModeError(f"'{config.attention_kind}' models have no penalty strength")
    total, steps = 0.0, 0
    for batch in batches:
        result = forward_batch(batch, params, config)
        total += float((result.strengths.data * result.mask).sum())
        steps += int(result.mask.sum())
    return total / steps if steps else 0.0
