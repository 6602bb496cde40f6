"""
Forced decoding: the decoder consumes the reference as feedback, so every
attention kind runs exactly |reference| steps on a pair.
"""
import math
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


def forced_decode(
    source: Sequence[int],
    reference: Sequence[int],
    params: ModelParams,
    config: ModelConfig,
    tau: float = math.inf,
    meter: Optional[ScoreMeter] = None,
) -> DecodeTrace:
    """
    ``tokens`` of the returned trace are the model's argmax predictions at
    each step; ``log_prob`` is the log-probability of the reference.
    """
    if len(reference) == 0:
        raise LengthError("reference sequence is empty")
    if len(source) == 0:
        raise LengthError("source sequence is empty")
    mechanism = build_attention(config)
    predicted: List[int] = []
    steps: List[AttentionStep] = []
    log_prob = 0.0

    with Stopwatch() as watch:
        enc = encode(source, params, config)
        encoder_projection(enc, params)
        state = initial_decoder_state(1, params, config)
        p_prev = None
        for step, gold in enumerate(reference, start=1):
            out = mechanism.attend(
                AttentionQuery(state.h, state.feedback, enc, p_prev, step),
                params, tau=tau, meter=meter, record=True,
            )
            state = decoder_step(state, out.context, params)
            log_probs = ops.log_softmax(output_logits(state, params)).data[0]
            predicted.append(int(np.argmax(log_probs)))
            log_prob += float(log_probs[gold])
            steps.extend(out.records)
            p_prev = out.focus
            state = DecoderState(state.h, state.c, embed_feedback([gold], params))

    if predicted and predicted[-1] == EOS_ID:
        predicted = predicted[:-1]
    return DecodeTrace(
        tokens=predicted,
        log_prob=log_prob,
        source_length=len(source),
        steps=steps,
        hyp_widths=[[s.width] for s in steps],
        score_evals=sum(s.score_evals for s in steps),
        duration_s=watch.elapsed,
    )
