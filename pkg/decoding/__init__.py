"""Beam, greedy and forced decoding with vision-span metering."""
from decoding.beam import Hypothesis, beam_search, greedy, greedy_batch
from decoding.corpus import CorpusDecodeSummary, corpus_metrics
from decoding.forced import forced_decode

__all__ = [
    "CorpusDecodeSummary",
    "Hypothesis",
    "beam_search",
    "corpus_metrics",
    "forced_decode",
    "greedy",
    "greedy_batch",
]
