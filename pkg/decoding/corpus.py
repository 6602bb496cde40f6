"""
Corpus-level decoding with merged vision-span metering.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

from attention import ScoreMeter
from decoding.beam import beam_search, greedy
from decoding.forced import forced_decode
from decoding.metering import Stopwatch
from models import CorpusPair, DecodeTrace, ModelConfig
from network.params import ModelParams
from utils.errors import EmptyBatchError
from utils.logging import get_logger

logger = get_logger(__name__)


@dataclass
class CorpusDecodeSummary:
    traces: List[DecodeTrace]
    avg_window: float            # Σ widths / Σ (step · hypothesis) counts
    per_sentence_window: float   # unweighted mean of sentence averages
    score_evals: int
    metered_evals: int           # independent count from the score function
    mean_g: Optional[float]
    mean_source_length: float
    baseline_window: float       # step·hypothesis-weighted source length (Global attention width)
    duration_s: float

    @property
    def hypotheses(self) -> List[List[int]]:
        return [t.tokens for t in self.traces]


def _decode_one(pair: CorpusPair, params, config, beam, tau, forced):
    meter = ScoreMeter()
    if forced:
        trace = forced_decode(pair.source, pair.target, params, config, tau=tau, meter=meter)
    elif beam == 1:
        trace = greedy(pair.source, params, config, tau=tau, meter=meter)
    else:
        trace = beam_search(pair.source, params, config, beam=beam, tau=tau, meter=meter)
    return trace, meter


def corpus_metrics(
    corpus: Sequence[CorpusPair],
    params: ModelParams,
    config: ModelConfig,
    beam: int = 5,
    tau: float = math.inf,
    workers: int = 1,
    forced: bool = False,
) -> CorpusDecodeSummary:
    """
    Decodes every pair. Sentences are independent and may run on ``workers``
    threads; each keeps its own meter and the meters are merged afterwards.
    """
    if not corpus:
        raise EmptyBatchError("corpus is empty")
    with Stopwatch() as watch:
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(lambda p: _decode_one(p, params, config, beam, tau, forced), corpus))
        else:
            results = [_decode_one(p, params, config, beam, tau, forced) for p in corpus]

    total = ScoreMeter()
    for _, meter in results:
        total.merge(meter)
    traces = [trace for trace, _ in results]
    widths = sum(sum(sum(ws) for ws in t.hyp_widths) for t in traces)
    counts = sum(t.hyp_count for t in traces)
    baseline = sum(t.source_length * t.hyp_count for t in traces)
    strengths = [s.g for t in traces for s in t.steps if s.g is not None]

    summary = CorpusDecodeSummary(
        traces=traces,
        avg_window=widths / counts if counts else 0.0,
        per_sentence_window=sum(t.avg_window for t in traces) / len(traces),
        score_evals=sum(t.score_evals for t in traces),
        metered_evals=total.count,
        mean_g=sum(strengths) / len(strengths) if strengths else None,
        mean_source_length=sum(len(p.source) for p in corpus) / len(corpus),
        baseline_window=baseline / counts if counts else 0.0,
        duration_s=watch.elapsed,
    )
    logger.debug(
        "decode_done",
        sentences=len(traces),
        tau=tau,
        beam=beam,
        avg_window=summary.avg_window,
        score_evals=summary.score_evals,
    )
    return summary
