"""Losses, optimiser, batching and the training loop."""
from training.batching import Batch, collate, make_batches
from training.losses import cross_entropy, finetune_loss, forward_batch, mean_strength
from training.optim import AdamState, adam_step, clip_gradients, learning_rate_for_epoch
from training.trainer import FinetuneResult, TrainResult, finetune, train

__all__ = [
    "AdamState",
    "Batch",
    "FinetuneResult",
    "TrainResult",
    "adam_step",
    "clip_gradients",
    "collate",
    "cross_entropy",
    "finetune",
    "finetune_loss",
    "forward_batch",
    "learning_rate_for_epoch",
    "make_batches",
    "mean_strength",
    "train",
]
