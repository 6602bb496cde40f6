"""
Corpus BLEU with add-one smoothing for n >= 2, and sequence accuracy.

    p_1 = matches_1 / total_1                        (exact)
    p_n = (matches_n + 1) / (total_n + 1)            n >= 2
    BP  = exp(min(0, 1 − |ref| / |hyp|))
    BLEU = BP · exp(mean_n log p_n)

Scores are in [0, 1].
"""
import math
from collections import Counter
from typing import Hashable, List, Sequence

from models import EOS_ID
from utils.errors import EmptyBatchError, ShapeError

Tokens = Sequence[Hashable]


def strip_eos(ids: Sequence[int]) -> List[int]:
    ids = list(ids)
    return ids[: ids.index(EOS_ID)] if EOS_ID in ids else ids


def ngram_counts(tokens: Tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _check_counts(hyps, refs) -> None:
    if len(hyps) != len(refs):
        raise ShapeError(f"{len(hyps)} hypotheses for {len(refs)} references")


def smoothed_bleu(hyps: Sequence[Tokens], refs: Sequence[Tokens], max_n: int = 4) -> float:
    _check_counts(hyps, refs)
    if not hyps:
        raise EmptyBatchError("BLEU needs at least one hypothesis")
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = ref_len = 0
    for hyp, ref in zip(hyps, refs):
        hyp, ref = list(hyp), list(ref)
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            h, r = ngram_counts(hyp, n), ngram_counts(ref, n)
            matches[n - 1] += sum(min(c, r[g]) for g, c in h.items())
            totals[n - 1] += max(0, len(hyp) - n + 1)

    if hyp_len == 0 or matches[0] == 0:
        return 0.0
    log_precision = math.log(matches[0] / totals[0])
    for n in range(1, max_n):
        log_precision += math.log((matches[n] + 1) / (totals[n] + 1))
    brevity = min(0.0, 1.0 - ref_len / hyp_len)
    return math.exp(brevity + log_precision / max_n)


def sequence_accuracy(hyps: Sequence[Tokens], refs: Sequence[Tokens]) -> float:
    """Fraction of exact matches."""
    _check_counts(hyps, refs)
    if not hyps:
        return 0.0
    return sum(1 for h, r in zip(hyps, refs) if list(h) == list(r)) / len(hyps)
