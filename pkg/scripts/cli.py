#!/usr/bin/env python3
"""
VISIONSPAN CLI - seq2seq attention laboratory

    gen           generate a synthetic corpus (train/dev/test + vocabularies)
    train         train a global, local or flexible model
    finetune      strength-regularised fine-tuning of a flexible model
    sweep         threshold sweep on dev and threshold selection
    eval          corpus metrics at one threshold
    visualize     vision-span grids for a sentence or a file
    bench         forced-decoding timing at tau = inf vs. a threshold
    compare       one comparison table over several checkpoints
    sigma-search  penalty-width search

Exit status is 0 on success, 1 on any run error (one line on stderr) and 2
on a usage error.
"""
import argparse
import json
import math
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

# Add parent dir to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from autodiff.precision import set_precision  # noqa: E402
from config import Config, RunConfig, load_run_config  # noqa: E402
from decoding import corpus_metrics, greedy  # noqa: E402
from evaluation import compare_table, evaluate, render_spans, render_tradeoff, select_threshold  # noqa: E402
from evaluation import sweep_sigmas, sweep_table, sweep_thresholds  # noqa: E402
from evaluation.render import render_spans_svg  # noqa: E402
from evaluation.sweep import load_sweep, save_sweep, window_reduction  # noqa: E402
from models import CorpusPair  # noqa: E402
from network import load_checkpoint, save_checkpoint  # noqa: E402
from tasks import Vocab, corpus_stats, generate, load_corpus, save_corpus, split, task_vocabs  # noqa: E402
from training import finetune, train  # noqa: E402
from utils.errors import VisionSpanError  # noqa: E402
from utils.logging import configure_structlog, get_logger, log_event  # noqa: E402

logger = get_logger(__name__)

# argparse dest -> RunConfig key
OVERRIDES = {
    "task": "task",
    "attention": "attention",
    "sigma": "sigma",
    "tau": "tau",
    "beta": "beta",
    "beam": "beam",
    "seed": "seed",
    "out": "out",
    "epochs": "epochs",
    "long_mode": "long_mode",
    "taus": "taus",
    "sigmas": "sigmas",
    "workers": "workers",
    "precision": "precision",
    "size": "size",
    "batch_size": "batch_size",
    "lr": "lr",
}


def _tau(value: str) -> float:
    if value.strip().lower() in ("inf", "infinity"):
        return math.inf
    try:
        tau = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid tau '{value}'") from None
    if not tau > 0:
        raise argparse.ArgumentTypeError("tau must be > 0")
    return tau


class VisionSpanCLI:
    """Command-line interface for the laboratory."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        overrides = {key: getattr(args, dest, None) for dest, key in OVERRIDES.items()}
        self.cfg: RunConfig = load_run_config(args.config, overrides)
        set_precision(self.cfg.precision)
        self.out = Path(self.cfg.out)

    # === helpers ===

    def _vocabs(self, corpus_path: Path):
        folder = corpus_path.parent
        return Vocab.load(folder / "src.vocab"), Vocab.load(folder / "tgt.vocab")

    def _corpus(self, flag: Optional[str], default_name: str) -> Path:
        return Path(flag) if flag else self.out / default_name

    def _load(self, path: Path) -> List[CorpusPair]:
        return load_corpus(path, self._vocabs(path))

    def _provenance(self) -> str:
        return json.dumps(self.cfg.resolved(), sort_keys=True)

    def _write_json(self, path: Path, payload: Dict[str, object]) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {**payload, "config": self.cfg.resolved()}
        path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")

    # === commands ===

    def cmd_gen(self) -> int:
        spec = self.cfg.task_spec()
        corpus = generate(spec)
        train_set, dev_set, test_set = split(corpus, self.cfg.split_ratios(), seed=self.cfg.seed)
        vocabs = task_vocabs(spec)
        self.out.mkdir(parents=True, exist_ok=True)
        vocabs[0].save(self.out / "src.vocab")
        vocabs[1].save(self.out / "tgt.vocab")
        for name, part in (("train", train_set), ("dev", dev_set), ("test", test_set)):
            save_corpus(part, vocabs, self.out / f"{name}.txt")
        stats = corpus_stats(corpus)
        self._write_json(self.out / "gen.json", {"stats": stats})
        print(
            f"pairs={stats['pairs']} train={len(train_set)} dev={len(dev_set)} test={len(test_set)} "
            f"mean_source_length={stats['mean_source_length']:.4f} "
            f"mean_target_length={stats['mean_target_length']:.4f} max_source_length={stats['max_source_length']}"
        )
        return 0

    def _checkpoint_path(self) -> Path:
        if self.args.checkpoint:
            return Path(self.args.checkpoint)
        return self.out / f"{self.cfg.attention}.ckpt"

    def cmd_train(self) -> int:
        train_path = self._corpus(self.args.corpus, "train.txt")
        dev_path = self._corpus(self.args.dev, "dev.txt")
        corpus = self._load(train_path)
        dev = self._load(dev_path) if dev_path.exists() else None
        model_config = self.cfg.model_settings()
        ckpt = self._checkpoint_path()
        result = train(
            corpus,
            model_config,
            self.cfg.train_settings(),
            dev=dev,
            checkpoint_path=ckpt,
            log_path=ckpt.with_suffix(".log.jsonl"),
            resume=self.args.resume,
            meta={"run_config": self._provenance(), "vocab_dir": str(train_path.parent)},
        )
        if result.best_epoch == 0:
            save_checkpoint(result.params, ckpt, model_config, meta={"run_config": self._provenance()})
        print(f"checkpoint={ckpt} attention={model_config.attention_kind} best_epoch={result.best_epoch}")
        return 0

    def cmd_finetune(self) -> int:
        ckpt = load_checkpoint(self.args.checkpoint)
        train_path = self._corpus(self.args.corpus, "train.txt")
        dev_path = self._corpus(self.args.dev, "dev.txt")
        corpus = self._load(train_path)
        dev = self._load(dev_path) if dev_path.exists() else None
        train_config = self.cfg.train_settings()
        result = finetune(ckpt.params, corpus, ckpt.config, train_config, held_out=dev)
        target = Path(self.args.output) if self.args.output else Path(str(self.args.checkpoint) + ".ft")
        save_checkpoint(result.params, target, ckpt.config, meta={**ckpt.meta, "run_config": self._provenance(),
                                                                  "finetune_beta": train_config.beta})
        print(f"beta={train_config.beta} mean_g_before={result.mean_g_before:.4f} "
              f"mean_g_after={result.mean_g_after:.4f} checkpoint={target}")
        return 0

    def cmd_sweep(self) -> int:
        ckpt = load_checkpoint(self.args.checkpoint)
        dev = self._load(self._corpus(self.args.dev, "dev.txt"))
        sweep = sweep_thresholds(ckpt.params, ckpt.config, dev, taus=self.cfg.taus,
                                 beam=self.cfg.beam, workers=self.cfg.workers)
        tau, row = select_threshold(sweep, self.cfg.max_bleu_loss)
        reference = sweep.reference().report
        save_sweep(sweep, self.out / "sweep.jsonl", provenance=self.cfg.resolved())
        if self.args.svg:
            render_tradeoff(sweep, self.args.svg)
        print(sweep_table(sweep))
        label = "inf" if math.isinf(tau) else f"{tau:g}"
        print(f"selected tau={label} window={row.report.avg_window:.2f} "
              f"reduction={100 * window_reduction(row.report.avg_window, reference.avg_window):.1f}%")
        return 0

    def cmd_eval(self) -> int:
        ckpt = load_checkpoint(self.args.checkpoint)
        test = self._load(self._corpus(self.args.test, "test.txt"))
        report = evaluate(test, ckpt.params, ckpt.config, beam=self.cfg.beam, tau=self.cfg.tau, workers=self.cfg.workers,
                          traces_path=self.out / "traces.jsonl")
        self._write_json(self.out / "eval.json", {"report": report.model_dump(mode="json")})
        print(report.model_dump_json())
        print(f"avg_window={report.avg_window:.2f} BLEU={100 * report.bleu:.2f} "
              f"seq_acc={100 * report.seq_accuracy:.2f} score_evals={report.score_evals}")
        return 0

    def cmd_visualize(self) -> int:
        ckpt = load_checkpoint(self.args.checkpoint)
        vocab_dir = Path(self.args.vocab_dir or ckpt.meta.get("vocab_dir", self.out))
        src_vocab, tgt_vocab = Vocab.load(vocab_dir / "src.vocab"), Vocab.load(vocab_dir / "tgt.vocab")
        if self.args.sentence:
            sentences = [self.args.sentence]
        else:
            text = Path(self.args.file).read_text(encoding="utf-8")
            sentences = [line.split("\t")[0] for line in text.split("\n") if line.strip()]

        grids = []
        for index, sentence in enumerate(sentences):
            tokens = sentence.split()
            ids, _ = src_vocab.encode(tokens)
            trace = greedy(ids, ckpt.params, ckpt.config, tau=self.cfg.tau)
            names = tgt_vocab.decode(trace.tokens)
            grids.append(render_spans(trace, len(ids), names))
            if self.args.svg:
                render_spans_svg(trace, Path(self.args.svg) / f"spans_{index:04d}.svg", tokens, names)
        print("\n\n".join(grids))
        return 0

    def _bench_tau(self) -> float:
        """An explicit --tau, else the threshold selected from sweep.jsonl in --out."""
        sweep_path = self.out / "sweep.jsonl"
        if self.args.tau is not None or not sweep_path.exists():
            return self.cfg.tau
        tau, _ = select_threshold(load_sweep(sweep_path), self.cfg.max_bleu_loss)
        log_event(logger, "bench_tau_from_sweep", tau=tau, path=str(sweep_path))
        return tau

    def cmd_bench(self) -> int:
        ckpt = load_checkpoint(self.args.checkpoint)
        corpus = self._load(self._corpus(self.args.corpus or self.args.test, "test.txt"))
        tau = self._bench_tau()
        full = corpus_metrics(corpus, ckpt.params, ckpt.config, tau=math.inf, workers=self.cfg.workers, forced=True)
        cut = corpus_metrics(corpus, ckpt.params, ckpt.config, tau=tau, workers=self.cfg.workers, forced=True)
        steps_full = sum(len(t.steps) for t in full.traces)
        steps_cut = sum(len(t.steps) for t in cut.traces)
        n = len(corpus)
        label = "inf" if math.isinf(tau) else f"{tau:g}"
        print(f"tau=inf mean_sentence_s={sum(t.duration_s for t in full.traces) / n:.6f} "
              f"steps={steps_full} score_evals={full.score_evals}")
        print(f"tau={label} mean_sentence_s={sum(t.duration_s for t in cut.traces) / n:.6f} "
              f"steps={steps_cut} score_evals={cut.score_evals}")
        print(f"score_evals_reduction={100 * window_reduction(cut.score_evals, full.score_evals):.1f}%")
        log_event(logger, "bench_done", tau=tau, steps=steps_cut, score_evals=cut.score_evals,
                  score_evals_full=full.score_evals)
        return 0

    def cmd_compare(self) -> int:
        test = self._load(self._corpus(self.args.test, "test.txt"))
        rows = []
        for path in self.args.checkpoints:
            ckpt = load_checkpoint(path)
            tau = self.cfg.tau if ckpt.config.attention_kind == "flexible" else math.inf
            report = evaluate(test, ckpt.params, ckpt.config, beam=self.cfg.beam, tau=tau, workers=self.cfg.workers)
            name = f"{ckpt.config.attention_kind} ({Path(path).name})"
            if ckpt.config.attention_kind == "flexible":
                name += f" tau={'inf' if math.isinf(tau) else f'{tau:g}'}"
            rows.append((name, report))
        print(compare_table(rows))
        return 0

    def cmd_sigma_search(self) -> int:
        corpus = self._load(self._corpus(self.args.corpus, "train.txt"))
        dev = self._load(self._corpus(self.args.dev, "dev.txt"))
        best, rows = sweep_sigmas(corpus, dev, self.cfg.model_settings("flexible"), self.cfg.train_settings(),
                                  sigmas=self.cfg.sigmas, beam=1, workers=self.cfg.workers)
        for row in rows:
            print(f"sigma={row.sigma:g} tau={row.tau:g} window={row.avg_window:.2f} BLEU={100 * row.bleu:.2f}")
        print(f"selected sigma={best:g}")
        return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value settings file")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int)
    common.add_argument("--precision", choices=["float64", "float32"])

    parser = argparse.ArgumentParser(prog="visionspan", description="Seq2seq attention laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--task", choices=["copy", "reverse", "block_swap"])
    p.add_argument("--long-mode", dest="long_mode", action="store_const", const=True)
    p.add_argument("--size", type=int)

    p = sub.add_parser("train", parents=[common], help="train a model")
    p.add_argument("--attention", choices=["global", "local", "flexible"])
    p.add_argument("--sigma", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--corpus")
    p.add_argument("--dev")
    p.add_argument("--checkpoint")
    p.add_argument("--resume", action="store_true")

    p = sub.add_parser("finetune", parents=[common], help="fine-tune a flexible model")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--beta", type=float)
    p.add_argument("--corpus")
    p.add_argument("--dev")
    p.add_argument("--output")

    p = sub.add_parser("sweep", parents=[common], help="threshold sweep")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dev")
    p.add_argument("--taus", help="comma-separated thresholds")
    p.add_argument("--beam", type=int)
    p.add_argument("--svg", help="write the trade-off plot here")

    p = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--test")
    p.add_argument("--tau", type=_tau)
    p.add_argument("--beam", type=int)

    p = sub.add_parser("visualize", parents=[common], help="render vision spans")
    p.add_argument("--checkpoint", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--sentence")
    group.add_argument("--file")
    p.add_argument("--tau", type=_tau)
    p.add_argument("--svg", help="directory for SVG grids")
    p.add_argument("--vocab-dir", dest="vocab_dir")

    p = sub.add_parser("bench", parents=[common], help="forced-decoding benchmark")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus")
    p.add_argument("--test")
    p.add_argument("--tau", type=_tau)

    p = sub.add_parser("compare", parents=[common], help="compare checkpoints")
    p.add_argument("--checkpoints", nargs="+", required=True)
    p.add_argument("--test")
    p.add_argument("--tau", type=_tau)
    p.add_argument("--beam", type=int)

    p = sub.add_parser("sigma-search", parents=[common], help="penalty-width search")
    p.add_argument("--corpus")
    p.add_argument("--dev")
    p.add_argument("--sigmas", help="comma-separated penalty widths")
    p.add_argument("--epochs", type=int)
    return parser


COMMANDS = {
    "gen": VisionSpanCLI.cmd_gen,
    "train": VisionSpanCLI.cmd_train,
    "finetune": VisionSpanCLI.cmd_finetune,
    "sweep": VisionSpanCLI.cmd_sweep,
    "eval": VisionSpanCLI.cmd_eval,
    "visualize": VisionSpanCLI.cmd_visualize,
    "bench": VisionSpanCLI.cmd_bench,
    "compare": VisionSpanCLI.cmd_compare,
    "sigma-search": VisionSpanCLI.cmd_sigma_search,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    ok, problem = Config.validate()
    if not ok:
        print(f"error: {problem}", file=sys.stderr)
        return 1
    configure_structlog(Config.LOG_LEVEL, Config.LOG_FORMAT)
    try:
        cli = VisionSpanCLI(args)
        return COMMANDS[args.command](cli)
    except (VisionSpanError, OSError, KeyError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
