"""
Threshold sweeps, threshold selection, penalty-width search and the
comparison table.
"""
import json
import math
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from decoding.corpus import corpus_metrics
from evaluation.bleu import sequence_accuracy, smoothed_bleu, strip_eos
from models import CorpusPair, DecodeTrace, EvalReport, ModelConfig, SigmaRow, SweepResult, SweepRow, TrainConfig
from network.params import ModelParams
from utils.errors import UnsupportedModeError
from utils.logging import get_logger, log_event

logger = get_logger(__name__)

DEFAULT_TAUS = (0.3, 0.5, 0.8, 1.0, 1.2, 1.4, 1.6, 5.0, 8.0, 999.0)
SEARCH_TAUS = (0.8, 1.0, 1.2, 1.4, 1.6)
DEFAULT_SIGMAS = (1.5, 5.0, 7.5, 10.0)
MAX_BLEU_LOSS = 0.005  # 0.5 BLEU points on the [0, 1] scale


def evaluate(
    corpus: Sequence[CorpusPair],
    params: ModelParams,
    config: ModelConfig,
    beam: int = 5,
    tau: float = math.inf,
    workers: int = 1,
    traces_path: Optional[Union[str, Path]] = None,
) -> EvalReport:
    summary = corpus_metrics(corpus, params, config, beam=beam, tau=tau, workers=workers)
    if traces_path is not None:
        save_traces(summary.traces, traces_path)
    refs = [strip_eos(p.target) for p in corpus]
    return EvalReport(
        bleu=smoothed_bleu(summary.hypotheses, refs),
        seq_accuracy=sequence_accuracy(summary.hypotheses, refs),
        avg_window=summary.avg_window,
        per_sentence_window=summary.per_sentence_window,
        score_evals=summary.score_evals,
        mean_g=summary.mean_g,
        mean_source_length=summary.mean_source_length,
        baseline_window=summary.baseline_window,
        duration_s=summary.duration_s,
        tau=tau,
    )


def sweep_thresholds(
    params: ModelParams,
    config: ModelConfig,
    dev: Sequence[CorpusPair],
    taus: Iterable[float] = DEFAULT_TAUS,
    beam: int = 1,
    workers: int = 1,
) -> SweepResult:
    """One EvalReport per tau, in increasing order, always ending with tau = inf."""
    if config.attention_kind != "flexible":
        raise UnsupportedModeError(f"threshold sweeps need a flexible model, got '{config.attention_kind}'")
    values = sorted(set(float(t) for t in taus) | {math.inf})
    rows = []
    for tau in values:
        report = evaluate(dev, params, config, beam=beam, tau=tau, workers=workers)
        rows.append(SweepRow(tau=tau, report=report))
        log_event(logger, "sweep_row", tau=tau, avg_window=report.avg_window, bleu=report.bleu,
                  seq_accuracy=report.seq_accuracy, score_evals=report.score_evals)
    return SweepResult(rows=rows)


def select_threshold(sweep: SweepResult, max_bleu_loss: float = MAX_BLEU_LOSS) -> Tuple[float, SweepRow]:
    """
    Smallest-window tau whose BLEU stays within ``max_bleu_loss`` of the
    tau = inf reference. Equal windows prefer higher BLEU, then larger tau.
    """
    reference = sweep.reference()
    if reference is None:
        raise ValueError("sweep holds no tau = inf reference row")
    floor = reference.report.bleu - max_bleu_loss - 1e-12
    qualified = [r for r in sweep.rows if r.report.bleu >= floor]
    best = min(qualified, key=lambda r: (r.report.avg_window, -r.report.bleu, -r.tau))
    if math.isinf(best.tau):
        logger.warning("threshold_fallback", reason="no finite tau within tolerance", max_bleu_loss=max_bleu_loss)
    log_event(logger, "threshold_selected", tau=best.tau, avg_window=best.report.avg_window,
              reduction=window_reduction(best.report.avg_window, reference.report.avg_window))
    return best.tau, best


def window_reduction(window: float, reference_window: float) -> float:
    """Fractional reduction of ``window`` against ``reference_window``."""
    return 1.0 - window / reference_window if reference_window else 0.0


def sweep_sigmas(
    train_corpus: Sequence[CorpusPair],
    dev: Sequence[CorpusPair],
    model_config: ModelConfig,
    train_config: TrainConfig,
    sigmas: Iterable[float] = DEFAULT_SIGMAS,
    taus: Iterable[float] = SEARCH_TAUS,
    beam: int = 1,
    workers: int = 1,
) -> Tuple[float, List[SigmaRow]]:
    """
    Trains one flexible model per penalty width, selects its threshold on
    ``dev`` and returns the width with the smallest selected window (ties go
    to the smaller sigma) with every row.
    """
    from training.trainer import train

    rows: List[SigmaRow] = []
    for sigma in sigmas:
        config = model_config.model_copy(update={"attention_kind": "flexible", "penalty_sigma": float(sigma)})
        result = train(train_corpus, config, train_config, dev=dev)
        sweep = sweep_thresholds(result.params, config, dev, taus=taus, beam=beam, workers=workers)
        tau, row = select_threshold(sweep)
        rows.append(SigmaRow(
            sigma=float(sigma),
            tau=tau,
            avg_window=row.report.avg_window,
            bleu=row.report.bleu,
            seq_accuracy=row.report.seq_accuracy,
        ))
        log_event(logger, "sigma_done", sigma=float(sigma), tau=tau, avg_window=row.report.avg_window)
    best = min(rows, key=lambda r: (r.avg_window, r.sigma))
    return best.sigma, rows


# === Tables ===

def _tau_label(tau: float) -> str:
    return "inf" if math.isinf(tau) else f"{tau:g}"


def format_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    """Left-aligned first column, right-aligned numbers."""
    widths = [max(len(str(c)) for c in col) for col in zip(header, *rows)]
    lines = []
    for row in [header, *rows]:
        cells = [str(row[0]).ljust(widths[0])] + [str(c).rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(cells))
    return "\n".join(lines)


def sweep_table(sweep: SweepResult) -> str:
    rows = []
    for row in sweep.rows:
        r = row.report
        rows.append([
            _tau_label(row.tau),
            f"{r.avg_window:.2f}",
            f"{100 * r.bleu:.2f}",
            f"{100 * r.seq_accuracy:.2f}",
            str(r.score_evals),
            "-" if r.mean_g is None else f"{r.mean_g:.3f}",
        ])
    return format_table(["tau", "window", "BLEU(%)", "acc(%)", "score_evals", "mean_g"], rows)


def compare_table(rows: Sequence[Tuple[str, EvalReport]]) -> str:
    """Model / window / BLEU comparison, one line per model."""
    body = [
        [name, f"{r.avg_window:.2f}", f"{100 * r.bleu:.2f}", f"{100 * r.seq_accuracy:.2f}", str(r.score_evals)]
        for name, r in rows
    ]
    return format_table(["model", "window", "BLEU(%)", "acc(%)", "score_evals"], body)


def save_sweep(sweep: SweepResult, path: Union[str, Path], provenance: Optional[dict] = None) -> Path:
    """One JSON record per tau; the first line carries the resolved run configuration."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        if provenance is not None:
            f.write(json.dumps({"config": provenance}, sort_keys=True, default=str) + "\n")
        for row in sweep.rows:
            f.write(row.model_dump_json() + "\n")
    return path


def save_traces(traces: Sequence[DecodeTrace], path: Union[str, Path]) -> Path:
    """One exported trace per sentence, in corpus order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for trace in traces:
            f.write(json.dumps(trace.export()) + "\n")
    return path


def load_sweep(path: Union[str, Path]) -> SweepResult:
    """Reads a file written by ``save_sweep``; the provenance line is skipped."""
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        record = json.loads(line) if line.strip() else {}
        if "tau" in record:
            rows.append(SweepRow.model_validate(record))
    return SweepResult(rows=rows)
