"""Metrics, threshold sweeps and vision-span rendering."""
from evaluation.bleu import sequence_accuracy, smoothed_bleu
from evaluation.render import narrow_fraction, render_spans, render_tradeoff, reordering_look
from evaluation.sweep import (
    DEFAULT_TAUS,
    compare_table,
    evaluate,
    select_threshold,
    sweep_sigmas,
    sweep_table,
    sweep_thresholds,
)

__all__ = [
    "DEFAULT_TAUS",
    "compare_table",
    "evaluate",
    "narrow_fraction",
    "render_spans",
    "render_tradeoff",
    "reordering_look",
    "select_threshold",
    "sequence_accuracy",
    "smoothed_bleu",
    "sweep_sigmas",
    "sweep_table",
    "sweep_thresholds",
]
