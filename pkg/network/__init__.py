"""Encoder-decoder network, parameters and checkpoints."""
from network.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from network.params import ModelParams, init_params, param_shapes, zero_params
from network.seq2seq import DecoderState, EncoderStates, decoder_step, encode, initial_decoder_state, output_logits

__all__ = [
    "Checkpoint",
    "DecoderState",
    "EncoderStates",
    "ModelParams",
    "decoder_step",
    "encode",
    "init_params",
    "initial_decoder_state",
    "load_checkpoint",
    "output_logits",
    "param_shapes",
    "save_checkpoint",
    "zero_params",
]
