"""
Length-sorted mini-batches with PAD padding and loss masks.
"""
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from models import PAD_ID, CorpusPair
from utils.errors import EmptyBatchError


@dataclass
class Batch:
    source: np.ndarray          # [B × S] ids, PAD-padded
    source_lengths: np.ndarray  # [B]
    target: np.ndarray          # [B × T] ids incl. EOS, PAD-padded
    target_lengths: np.ndarray  # [B]
    pairs: List[CorpusPair]

    @property
    def size(self) -> int:
        return self.source.shape[0]

    @property
    def loss_mask(self) -> np.ndarray:
        return np.arange(self.target.shape[1])[None, :] < self.target_lengths[:, None]


def _pad(rows: Sequence[Sequence[int]], width: int) -> np.ndarray:
    out = np.full((len(rows), width), PAD_ID, dtype=np.int64)
    for i, row in enumerate(rows):
        out[i, :len(row)] = row
    return out


def collate(pairs: Sequence[CorpusPair], source_width: int = 0, target_width: int = 0) -> Batch:
    """Pads to the batch maximum, or to the given widths when larger."""
    if not pairs:
        raise EmptyBatchError("cannot build a batch from zero pairs")
    src_len = np.array([len(p.source) for p in pairs], dtype=np.int64)
    tgt_len = np.array([len(p.target) for p in pairs], dtype=np.int64)
    return Batch(
        source=_pad([p.source for p in pairs], max(int(src_len.max()), source_width)),
        source_lengths=src_len,
        target=_pad([p.target for p in pairs], max(int(tgt_len.max()), target_width)),
        target_lengths=tgt_len,
        pairs=list(pairs),
    )


def make_batches(corpus: Sequence[CorpusPair], batch_size: int, seed: int) -> List[Batch]:
    """
    Sorts pairs by source length (stable), cuts consecutive groups of
    ``batch_size`` and shuffles the order of the groups with ``seed``.
    """
    if not corpus:
        raise EmptyBatchError("corpus is empty")
    ordered = sorted(corpus, key=lambda p: len(p.source))
    groups = [ordered[i:i + batch_size] for i in range(0, len(ordered), batch_size)]
    order = np.random.default_rng(seed).permutation(len(groups))
    return [collate(groups[i]) for i in order]
