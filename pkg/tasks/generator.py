"""
Synthetic reordering tasks.

Source sentences are concatenations of chunks of distinct tokens ``sN``;
targets use the bijection sN -> tN, so token N has the same id on both sides
and gold alignments are known.

    copy        target = f(source)
    reverse     target = f(source) reversed
    block_swap  with probability q one chunk C_j (j >= 2) moves to the front
"""
from typing import List, Optional, Tuple

import numpy as np

from models import EOS_ID, CorpusPair, TaskSpec
from tasks.vocab import FIRST_ID, Vocab
from utils.errors import TaskSpecError


def task_vocabs(spec: TaskSpec) -> Tuple[Vocab, Vocab]:
    return Vocab.for_task("s", spec.vocab_size), Vocab.for_task("t", spec.vocab_size)


def check_spec(spec: TaskSpec) -> None:
    if spec.max_source_len > spec.max_len:
        raise TaskSpecError(
            f"sentences of up to {spec.max_source_len} tokens exceed max_len {spec.max_len}"
        )
    if spec.vocab_size < spec.max_source_len:
        raise TaskSpecError(
            f"vocab_size {spec.vocab_size} is too small for sentences of up to {spec.max_source_len} distinct tokens"
        )


def draw_chunks(spec: TaskSpec, rng: np.random.Generator) -> List[List[int]]:
    lo, hi = spec.chunk_len_range
    k = int(rng.integers(spec.min_chunks, spec.max_chunks + 1))
    sizes = [int(rng.integers(lo, hi + 1)) for _ in range(k)]
    ids = (rng.choice(spec.vocab_size, size=sum(sizes), replace=False) + FIRST_ID).tolist()
    chunks, start = [], 0
    for size in sizes:
        chunks.append(ids[start:start + size])
        start += size
    return chunks


def arrange(kind: str, chunks: List[List[int]], swap_index: Optional[int] = None) -> List[int]:
    """
    Target ids (without EOS) for a chunked source.
    ``swap_index`` is the 1-based chunk moved to the front by block_swap.
    """
    flat = [t for chunk in chunks for t in chunk]
    if kind == "copy":
        return flat
    if kind == "reverse":
        return flat[::-1]
    if swap_index is None:
        return flat
    j = swap_index - 1
    moved = chunks[j]
    rest = [t for i, chunk in enumerate(chunks) if i != j for t in chunk]
    return moved + rest


def generate_pair(spec: TaskSpec, index: int) -> CorpusPair:
    rng = np.random.default_rng([spec.seed, index])
    chunks = draw_chunks(spec, rng)
    swap_index = None
    if spec.kind == "block_swap" and len(chunks) >= 2 and rng.random() < spec.swap_prob:
        swap_index = int(rng.integers(2, len(chunks) + 1))
    source = [t for chunk in chunks for t in chunk]
    return CorpusPair(source=source, target=arrange(spec.kind, chunks, swap_index) + [EOS_ID])


def generate(spec: TaskSpec) -> List[CorpusPair]:
    """Deterministic under ``spec.seed``; pair i depends only on (seed, i)."""
    check_spec(spec)
    return [generate_pair(spec, i) for i in range(spec.size)]


def alignment(pair: CorpusPair) -> List[int]:
    """Source position of every target token (EOS excluded)."""
    where = {t: s for s, t in enumerate(pair.source)}
    return [where[t] for t in pair.target[:-1]]


def is_monotone(pair: CorpusPair) -> bool:
    positions = alignment(pair)
    return all(a < b for a, b in zip(positions, positions[1:]))


def displaced_blocks(pair: CorpusPair) -> int:
    """Number of maximal contiguous source runs that appear out of order in the target."""
    positions = alignment(pair)
    runs = []
    for p in positions:
        if runs and p == runs[-1][1] + 1:
            runs[-1][1] = p
        else:
            runs.append([p, p])
    starts = [r[0] for r in runs]
    return sum(1 for a, b in zip(starts, starts[1:]) if b < a)
