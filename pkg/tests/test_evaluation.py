import json
import math

import pytest
from structlog.testing import capture_logs

from evaluation import (
    compare_table,
    evaluate,
    narrow_fraction,
    render_spans,
    render_tradeoff,
    reordering_look,
    select_threshold,
    sequence_accuracy,
    smoothed_bleu,
    sweep_table,
    sweep_thresholds,
)
from evaluation.bleu import strip_eos
from evaluation.render import render_spans_svg
from evaluation.sweep import load_sweep, save_sweep, window_reduction
from models import EOS_ID, AttentionStep, DecodeTrace, EvalReport, SweepResult, SweepRow
from utils.errors import EmptyBatchError, ShapeError, UnsupportedModeError


def _report(window, bleu, tau=math.inf):
    return EvalReport(bleu=bleu, seq_accuracy=bleu, avg_window=window, score_evals=int(10 * window), tau=tau)


def _sweep(rows):
    return SweepResult(rows=[SweepRow(tau=tau, report=_report(window, bleu, tau)) for tau, window, bleu in rows])


def _trace(windows, S, tokens=(), gs=None):
    gs = gs or [None] * len(windows)
    steps = [
        AttentionStep(step=i + 1, lo=lo, hi=hi, g=g, score_evals=hi - lo + 1)
        for i, ((lo, hi), g) in enumerate(zip(windows, gs))
    ]
    return DecodeTrace(tokens=list(tokens), log_prob=0.0, source_length=S, steps=steps,
                       hyp_widths=[[s.width] for s in steps])


class TestBleu:
    def test_identical_corpus(self):
        refs = [["a", "b", "c", "d"], ["e", "f"]]
        assert smoothed_bleu(refs, refs) == 1.0

    def test_short_hypothesis(self):
        assert smoothed_bleu([["a", "b", "c"]], [["a", "b", "c", "d"]]) == pytest.approx(math.exp(-1 / 3), abs=1e-12)

    def test_no_overlap(self):
        assert smoothed_bleu([["x", "y", "z"]], [["a", "b", "c"]]) < 0.05

    def test_empty_hypothesis(self):
        assert smoothed_bleu([[]], [["a"]]) == 0.0

    def test_order_of_pairs_does_not_matter(self):
        hyps = [[4, 5, 6], [7, 8], [9, 4, 5, 6]]
        refs = [[4, 5, 7], [7, 8], [9, 4, 6, 5]]
        assert smoothed_bleu(hyps, refs) == smoothed_bleu(hyps[::-1], refs[::-1])

    def test_errors(self):
        with pytest.raises(ShapeError):
            smoothed_bleu([[1]], [[1], [2]])
        with pytest.raises(EmptyBatchError):
            smoothed_bleu([], [])

    def test_sequence_accuracy(self):
        hyps = [[1, 2], [3], [4, 5], [6]]
        refs = [[1, 2], [3], [4, 5], [7]]
        assert sequence_accuracy(hyps, refs) == 0.75

    def test_strip_eos(self):
        assert strip_eos([4, 5, EOS_ID, 6]) == [4, 5]
        assert strip_eos([4, 5]) == [4, 5]


class TestThresholdSelection:
    def test_all_within_tolerance_picks_the_smallest_window(self):
        sweep = _sweep([(0.5, 4.0, 0.901), (1.0, 5.0, 0.902), (math.inf, 9.0, 0.903)])
        tau, row = select_threshold(sweep)
        assert tau == 0.5
        assert row.report.avg_window == 4.0

    def test_rows_outside_tolerance_are_skipped(self):
        sweep = _sweep([(0.5, 4.0, 0.80), (1.0, 5.0, 0.899), (math.inf, 9.0, 0.90)])
        assert select_threshold(sweep)[0] == 1.0

    def test_falls_back_to_infinity_with_a_warning(self):
        sweep = _sweep([(0.5, 4.0, 0.5), (1.0, 5.0, 0.6), (math.inf, 9.0, 0.9)])
        with capture_logs() as logs:
            tau, _ = select_threshold(sweep)
        assert math.isinf(tau)
        assert any(e["event"] == "threshold_fallback" and e["log_level"] == "warning" for e in logs)

    def test_equal_windows_prefer_higher_bleu(self):
        sweep = _sweep([(0.5, 4.0, 0.899), (1.0, 4.0, 0.90), (math.inf, 9.0, 0.90)])
        assert select_threshold(sweep)[0] == 1.0

    def test_sweep_needs_a_reference_row(self):
        with pytest.raises(ValueError):
            select_threshold(_sweep([(0.5, 4.0, 0.5)]))

    def test_taus_must_increase(self):
        with pytest.raises(ValueError):
            _sweep([(1.0, 4.0, 0.5), (0.5, 4.0, 0.5)])

    def test_window_reduction(self):
        assert window_reduction(10.7, 24.4) == pytest.approx(0.5615, abs=1e-4)
        assert window_reduction(3.0, 0.0) == 0.0


class TestTables:
    def test_sweep_table(self):
        lines = sweep_table(_sweep([(0.5, 4.0, 0.5), (math.inf, 9.0, 0.9)])).splitlines()
        assert lines[0].split() == ["tau", "window", "BLEU(%)", "acc(%)", "score_evals", "mean_g"]
        assert lines[1].split()[:3] == ["0.5", "4.00", "50.00"]
        assert lines[2].split()[0] == "inf"

    def test_compare_table(self):
        text = compare_table([("global", _report(8.0, 0.9)), ("flexible", _report(3.5, 0.88))])
        rows = [line.split() for line in text.splitlines()]
        assert rows[1][:3] == ["global", "8.00", "90.00"]
        assert rows[2][:3] == ["flexible", "3.50", "88.00"]

    def test_save_sweep(self, tmp_path):
        path = save_sweep(_sweep([(0.5, 4.0, 0.5), (math.inf, 9.0, 0.9)]), tmp_path / "sweep.jsonl",
                          provenance={"seed": 7})
        records = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]
        assert records[0] == {"config": {"seed": 7}}
        assert records[1]["tau"] == 0.5
        assert math.isinf(records[2]["tau"])
        loaded = load_sweep(path)
        assert [r.tau for r in loaded.rows] == [0.5, math.inf]
        assert loaded.reference().report.avg_window == 9.0


class TestRendering:
    def test_grid_marks_each_window(self):
        trace = _trace([(0, 4), (1, 2)], S=5, tokens=[7], gs=[0.5, 0.8])
        rows = render_spans(trace).splitlines()
        assert rows[0].startswith("#####  g=0.50 7")
        assert rows[1].startswith(".##..  g=0.80 </s>")

    def test_grid_dimensions(self):
        trace = _trace([(0, 2), (2, 5), (3, 3)], S=6, tokens=[4, 5, 6])
        rows = render_spans(trace).splitlines()
        assert len(rows) == 3
        assert all(len(r.split()[0]) == 6 for r in rows)
        assert [r.split()[0].index("#") for r in rows] == [0, 2, 3]

    def test_global_attention_fills_every_row(self):
        trace = _trace([(0, 3)] * 3, S=4, tokens=[4, 5])
        assert all(r.split()[0] == "####" for r in render_spans(trace).splitlines())

    def test_token_names(self):
        trace = _trace([(0, 1)], S=2, tokens=[4])
        assert render_spans(trace, token_names=["t1"]).endswith("t1")

    def test_reordering_look(self):
        assert reordering_look(_trace([(0, 1), (1, 2), (0, 5), (3, 4)], S=6))
        assert not reordering_look(_trace([(0, 1), (1, 2), (2, 4)], S=6))

    def test_narrow_fraction(self):
        trace = _trace([(0, 1), (1, 2), (0, 5), (2, 4)], S=6)
        assert narrow_fraction(trace) == 0.75
        assert narrow_fraction(_trace([], S=6)) == 0.0

    def test_svg_outputs(self, tmp_path):
        trace = _trace([(0, 4), (1, 2)], S=5, tokens=[7], gs=[0.5, 0.8])
        spans = render_spans_svg(trace, tmp_path / "spans.svg")
        plot = render_tradeoff(_sweep([(0.5, 4.0, 0.5), (math.inf, 9.0, 0.9)]), tmp_path / "plot" / "tradeoff.svg")
        assert "<svg" in spans.read_text(encoding="utf-8")
        assert "<svg" in plot.read_text(encoding="utf-8")


class TestEvaluate:
    def test_global_report(self, make_model, toy_pairs):
        config, params = make_model("global", seed=2)
        report = evaluate(toy_pairs, params, config, beam=2)
        assert report.avg_window == report.baseline_window
        assert report.mean_source_length == 3.0
        assert report.mean_g is None
        assert 0.0 <= report.bleu <= 1.0
        assert math.isinf(report.tau)

    def test_sweep_rows_end_at_infinity(self, make_model, toy_pairs):
        config, params = make_model("flexible", seed=2)
        sweep = sweep_thresholds(params, config, toy_pairs, taus=[1.2, 0.5, 1.2])
        assert [row.tau for row in sweep.rows] == [0.5, 1.2, math.inf]
        assert all(row.report.avg_window <= row.report.baseline_window + 1e-9 for row in sweep.rows)
        assert sweep.rows[-1].report.avg_window == sweep.rows[-1].report.baseline_window

    def test_sweep_needs_a_flexible_model(self, make_model, toy_pairs):
        config, params = make_model("global")
        with pytest.raises(UnsupportedModeError):
            sweep_thresholds(params, config, toy_pairs)
