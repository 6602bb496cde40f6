"""
Shared fixtures: tiny model configurations, seeded parameters and small
synthetic corpora. Slow end-to-end runs are skipped unless VISIONSPAN_SLOW=1.
"""
import os

import numpy as np
import pytest
import structlog

from autodiff.precision import set_precision
from models import EOS_ID, CorpusPair, ModelConfig, TaskSpec
from network import init_params
from tasks import generate

RUN_SLOW = os.getenv("VISIONSPAN_SLOW") == "1"


def pytest_collection_modifyitems(config, items):
    if RUN_SLOW:
        return
    skip = pytest.mark.skip(reason="set VISIONSPAN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(autouse=True)
def _float64_and_default_logging():
    set_precision("float64")
    yield
    set_precision("float64")
    structlog.reset_defaults()


def _make_config(kind: str = "flexible", vocab: int = 12, **overrides) -> ModelConfig:
    settings = dict(
        src_vocab=vocab,
        tgt_vocab=vocab,
        embed_dim=4,
        hidden_dim=3,
        preout_dim=5,
        attention_kind=kind,
    )
    settings.update(overrides)
    return ModelConfig(**settings)


@pytest.fixture
def make_config():
    """Factory for tiny configurations: make_config("global", vocab=20)."""
    return _make_config


@pytest.fixture
def make_model():
    """Factory returning (config, params) with seeded random weights."""
    def build(kind: str = "flexible", seed: int = 0, **overrides):
        config = _make_config(kind, **overrides)
        return config, init_params(config, seed=seed)
    return build


@pytest.fixture
def toy_pairs():
    """Three short pairs over ids 4..11."""
    return [
        CorpusPair(source=[4, 5, 6], target=[4, 5, 6, EOS_ID]),
        CorpusPair(source=[7, 8], target=[8, 7, EOS_ID]),
        CorpusPair(source=[9, 10, 11, 4], target=[9, 10, 11, 4, EOS_ID]),
    ]


@pytest.fixture
def small_task():
    return TaskSpec(kind="block_swap", vocab_size=30, min_chunks=2, max_chunks=3,
                    min_chunk_len=1, max_chunk_len=3, swap_prob=0.5, seed=3, size=40, max_len=20)


@pytest.fixture
def small_corpus(small_task):
    return generate(small_task)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
