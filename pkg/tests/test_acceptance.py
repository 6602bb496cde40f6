"""
End-to-end runs at the default desk scale. Minutes to an hour each;
enable with VISIONSPAN_SLOW=1.
"""
import pytest

from config import load_run_config
from evaluation.sweep import load_sweep
from scripts.final_verification import (
    ACCURACY_TOLERANCE,
    HEADLINE_REDUCTION,
    LONG,
    LONG_REDUCTION,
    SPAN_SHARE,
    run_pipeline,
)

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def headline(tmp_path_factory):
    return run_pipeline(load_run_config(), tmp_path_factory.mktemp("headline"))


def test_window_reduction_against_global(headline):
    assert headline.reduction >= HEADLINE_REDUCTION
    assert headline.accuracy_drop <= ACCURACY_TOLERANCE


def test_finetuning_raises_strength(headline):
    assert headline.mean_g_after > headline.mean_g_before


def test_spans_look_wide_only_at_reorderings(headline):
    assert headline.span_swapped >= SPAN_SHARE
    assert headline.span_monotone >= SPAN_SHARE


def test_tradeoff_curve_shape(headline):
    rows = load_sweep(headline.out / "sweep.jsonl").rows
    windows = [row.report.avg_window for row in rows]
    assert windows == sorted(windows)
    assert rows[0].report.bleu <= rows[-1].report.bleu


def test_identical_runs_are_identical(headline, tmp_path):
    repeat = run_pipeline(load_run_config(), tmp_path / "repeat")
    for a, b in zip(headline.artifacts, repeat.artifacts):
        assert a.read_bytes() == b.read_bytes()
    assert repeat.sweep_text == headline.sweep_text
    assert repeat.tau == headline.tau
    assert repeat.flexible_report.model_dump(exclude={"duration_s"}) == \
        headline.flexible_report.model_dump(exclude={"duration_s"})


def test_long_sequences(tmp_path):
    run = run_pipeline(load_run_config(overrides=LONG), tmp_path / "long")
    assert run.reduction >= LONG_REDUCTION
    assert run.accuracy_drop <= ACCURACY_TOLERANCE
