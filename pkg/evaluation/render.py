"""
Vision-span rendering: a text grid per decoded sentence, an optional SVG
with the same layout, and the window/BLEU trade-off plot.
"""
from pathlib import Path
from statistics import median
from typing import List, Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from models import DecodeTrace, SweepResult  # noqa: E402

INSIDE = "#"
OUTSIDE = "."


def step_labels(trace: DecodeTrace, token_names: Optional[Sequence[str]] = None) -> List[str]:
    """Emitted token per step; the step that produced EOS is labelled </s>."""
    names = list(token_names) if token_names is not None else [str(t) for t in trace.tokens]
    return [names[i] if i < len(names) else "</s>" for i in range(len(trace.steps))]


def render_spans(trace: DecodeTrace, S: Optional[int] = None, token_names: Optional[Sequence[str]] = None) -> str:
    """
    One row per decoding step, one column per source position: '#' inside
    the step's [lo, hi], '.' outside, then the strength and emitted token.
    """
    S = S or trace.source_length
    rows = []
    for step, label in zip(trace.steps, step_labels(trace, token_names)):
        cells = "".join(INSIDE if step.lo <= s <= step.hi else OUTSIDE for s in range(S))
        strength = "g=   -" if step.g is None else f"g={step.g:.2f}"
        rows.append(f"{cells}  {strength} {label}")
    return "\n".join(rows)


def render_spans_svg(
    trace: DecodeTrace,
    path: Union[str, Path],
    source_names: Optional[Sequence[str]] = None,
    token_names: Optional[Sequence[str]] = None,
) -> Path:
    S = trace.source_length
    grid = np.zeros((len(trace.steps), S))
    for r, step in enumerate(trace.steps):
        grid[r, step.lo:step.hi + 1] = 1.0

    fig, ax = plt.subplots(figsize=(max(4, 0.35 * S + 2), max(3, 0.35 * len(trace.steps) + 1)))
    ax.imshow(grid, cmap="Greys", vmin=0, vmax=1, aspect="equal")
    ax.set_xticks(range(S))
    ax.set_xticklabels(source_names if source_names is not None else range(S), rotation=90)
    labels = step_labels(trace, token_names)
    ax.set_yticks(range(len(labels)))
    ax.set_yticklabels([
        label if step.g is None else f"{label} (g={step.g:.2f})" for label, step in zip(labels, trace.steps)
    ])
    ax.set_xlabel("source position")
    ax.set_ylabel("decoding step")
    fig.tight_layout()

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def render_tradeoff(sweep: SweepResult, path: Union[str, Path]) -> Path:
    """BLEU against average window size, one point per threshold."""
    windows = [row.report.avg_window for row in sweep.rows]
    bleu = [100 * row.report.bleu for row in sweep.rows]

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(windows, bleu, marker="o")
    for row, x, y in zip(sweep.rows, windows, bleu):
        ax.annotate("inf" if np.isinf(row.tau) else f"{row.tau:g}", (x, y), textcoords="offset points", xytext=(4, 4))
    ax.set_xlabel("average window (words)")
    ax.set_ylabel("BLEU (%)")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def reordering_look(trace: DecodeTrace) -> bool:
    """True when some step's window is at least twice the sentence's median width."""
    widths = [s.width for s in trace.steps]
    return bool(widths) and max(widths) >= 2 * median(widths)


def narrow_fraction(trace: DecodeTrace, S: Optional[int] = None) -> float:
    """Share of steps whose window is at most half the source length."""
    S = S or trace.source_length
    if not trace.steps:
        return 0.0
    return sum(1 for s in trace.steps if s.width <= S / 2) / len(trace.steps)
