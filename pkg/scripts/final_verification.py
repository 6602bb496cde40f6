"""
End-to-end verification of the headline pipeline.

Runs generate -> train (global, flexible) -> fine-tune -> threshold sweep
-> test evaluation on block_swap, once in the default mode and once in
long mode, and prints a PASS/FAIL line per check:

    headline      window reduction >= 40% vs. global, seq. accuracy within 2 points
    finetune      held-out mean strength rises after fine-tuning
    long          long-mode reduction >= 30%, same accuracy tolerance
    spans         swapped sentences look wide once; monotone ones stay narrow
    determinism   a second identical run gives identical checkpoints and tables

Usage:
    python scripts/final_verification.py [--out DIR] [--quick] [--skip-long] [--skip-determinism]
"""
import argparse
import filecmp
import math
import sys
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional

sys.path.insert(0, str(Path(__file__).parent.parent))

from autodiff.precision import set_precision  # noqa: E402
from config import Config, RunConfig, load_run_config  # noqa: E402
from decoding import corpus_metrics  # noqa: E402
from evaluation import evaluate, narrow_fraction, reordering_look, select_threshold, sweep_table, sweep_thresholds  # noqa: E402
from evaluation.sweep import save_sweep, window_reduction  # noqa: E402
from models import EvalReport  # noqa: E402
from network import save_checkpoint  # noqa: E402
from tasks import generate, is_monotone, split  # noqa: E402
from training import finetune, train  # noqa: E402
from utils.logging import configure_structlog  # noqa: E402

HEADLINE_REDUCTION = 0.40
LONG_REDUCTION = 0.30
ACCURACY_TOLERANCE = 0.02
SPAN_SHARE = 0.80

QUICK = {"size": 1200, "dev_size": 100, "test_size": 100, "epochs": 3, "taus": "0.8,1.0,1.2,1.4,1.6"}
LONG = {"long_mode": True, "size": 3600, "dev_size": 300, "test_size": 300}


@dataclass
class PipelineRun:
    out: Path
    tau: float
    global_report: EvalReport
    flexible_report: EvalReport
    mean_g_before: float
    mean_g_after: float
    sweep_text: str
    span_swapped: float = 0.0
    span_monotone: float = 0.0
    artifacts: List[Path] = field(default_factory=list)

    @property
    def reduction(self) -> float:
        return window_reduction(self.flexible_report.avg_window, self.global_report.avg_window)

    @property
    def accuracy_drop(self) -> float:
        return self.global_report.seq_accuracy - self.flexible_report.seq_accuracy


def run_pipeline(cfg: RunConfig, out: Path) -> PipelineRun:
    """Trains both models, fine-tunes, selects tau on dev and evaluates on test."""
    out.mkdir(parents=True, exist_ok=True)
    train_set, dev, test = split(generate(cfg.task_spec()), cfg.split_ratios(), seed=cfg.seed)
    train_config = cfg.train_settings()

    global_config = cfg.model_settings("global")
    baseline = train(train_set, global_config, train_config, dev=dev)
    save_checkpoint(baseline.params, out / "global.ckpt", global_config)

    flexible_config = cfg.model_settings("flexible")
    flexible = train(train_set, flexible_config, train_config, dev=dev)
    tuned = finetune(flexible.params, train_set, flexible_config, train_config, held_out=dev)
    save_checkpoint(tuned.params, out / "flexible.ckpt", flexible_config)

    sweep = sweep_thresholds(tuned.params, flexible_config, dev, taus=cfg.taus, beam=1, workers=cfg.workers)
    tau, _ = select_threshold(sweep, cfg.max_bleu_loss)
    save_sweep(sweep, out / "sweep.jsonl")

    global_report = evaluate(test, baseline.params, global_config, beam=cfg.beam, workers=cfg.workers)
    flexible_report = evaluate(test, tuned.params, flexible_config, beam=cfg.beam, tau=tau, workers=cfg.workers)

    run = PipelineRun(
        out=out,
        tau=tau,
        global_report=global_report,
        flexible_report=flexible_report,
        mean_g_before=tuned.mean_g_before,
        mean_g_after=tuned.mean_g_after,
        sweep_text=sweep_table(sweep),
        artifacts=[out / "global.ckpt", out / "flexible.ckpt"],
    )
    run.span_swapped, run.span_monotone = span_shares(test, tuned.params, flexible_config, tau, cfg.workers)
    return run


def span_shares(test, params, config, tau: float, workers: int = 1):
    """(share of swapped sentences with a wide step, share of narrow steps on monotone ones)."""
    summary = corpus_metrics(test, params, config, beam=1, tau=tau, workers=workers, forced=True)
    swapped, monotone = [], []
    for pair, trace in zip(test, summary.traces):
        if is_monotone(pair):
            monotone.append(narrow_fraction(trace))
        else:
            swapped.append(reordering_look(trace))
    swapped_share = sum(swapped) / len(swapped) if swapped else 1.0
    monotone_share = sum(monotone) / len(monotone) if monotone else 1.0
    return swapped_share, monotone_share


def _metrics(run: PipelineRun) -> Dict[str, object]:
    r = run.flexible_report
    return {"tau": run.tau, "avg_window": r.avg_window, "bleu": r.bleu, "acc": r.seq_accuracy, "evals": r.score_evals}


def _status(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def verify(args) -> Dict[str, str]:
    overrides = dict(QUICK) if args.quick else {}
    cfg = load_run_config(args.config, {**overrides, "task": "block_swap"})
    out = Path(args.out)
    results: Dict[str, str] = {}

    print("\n[STEP 1] Headline pipeline (block_swap)...")
    first = run_pipeline(cfg, out / "headline")
    print(first.sweep_text)
    label = "inf" if math.isinf(first.tau) else f"{first.tau:g}"
    print(f"   -> selected tau={label} reduction={100 * first.reduction:.1f}% "
          f"accuracy_drop={100 * first.accuracy_drop:.2f} points")
    results["headline"] = _status(first.reduction >= HEADLINE_REDUCTION and first.accuracy_drop <= ACCURACY_TOLERANCE)

    print("\n[STEP 2] Fine-tuning direction...")
    print(f"   -> mean g before={first.mean_g_before:.4f} after={first.mean_g_after:.4f}")
    results["finetune"] = _status(first.mean_g_after > first.mean_g_before)

    print("\n[STEP 3] Span shapes...")
    print(f"   -> swapped with a wide step: {100 * first.span_swapped:.1f}%  "
          f"narrow steps on monotone: {100 * first.span_monotone:.1f}%")
    results["spans"] = _status(first.span_swapped >= SPAN_SHARE and first.span_monotone >= SPAN_SHARE)

    if not args.skip_long:
        print("\n[STEP 4] Long-sequence pipeline...")
        long_cfg = cfg.model_copy(update=LONG if not args.quick else {"long_mode": True})
        long_run = run_pipeline(long_cfg, out / "long")
        print(f"   -> reduction={100 * long_run.reduction:.1f}% accuracy_drop={100 * long_run.accuracy_drop:.2f} points")
        results["long"] = _status(long_run.reduction >= LONG_REDUCTION and long_run.accuracy_drop <= ACCURACY_TOLERANCE)

    if not args.skip_determinism:
        print("\n[STEP 5] Determinism (second identical run)...")
        second = run_pipeline(cfg, out / "headline_repeat")
        same_files = all(filecmp.cmp(a, b, shallow=False) for a, b in zip(first.artifacts, second.artifacts))
        same = same_files and first.sweep_text == second.sweep_text and _metrics(first) == _metrics(second)
        results["determinism"] = _status(same)

    return results


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(description="End-to-end verification")
    parser.add_argument("--out", default=str(Config.RUNS_DIR / "verification"))
    parser.add_argument("--config", help="key=value settings file")
    parser.add_argument("--quick", action="store_true", help="small corpora and few epochs (smoke run)")
    parser.add_argument("--skip-long", action="store_true")
    parser.add_argument("--skip-determinism", action="store_true")
    args = parser.parse_args(argv)

    configure_structlog(Config.LOG_LEVEL, Config.LOG_FORMAT)
    Config.ensure_directories()
    set_precision("float64")
    print(f"STARTING FINAL VERIFICATION at {datetime.now()}")
    print("=" * 60)
    results = verify(args)

    print("\n" + "=" * 60)
    for name, status in results.items():
        print(f"{name:<14}{status}")
    print("=" * 60)
    return 0 if all(s == "PASS" for s in results.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
