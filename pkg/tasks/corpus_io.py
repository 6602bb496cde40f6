"""
Corpus files: one pair per line, source tokens, a single tab, target tokens
(EOS implicit). UTF-8 with LF line endings.
"""
import math
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from models import EOS_ID, CorpusPair
from tasks.vocab import Vocab
from utils.errors import CorpusParseError, SplitError
from utils.logging import get_logger

logger = get_logger(__name__)

Vocabs = Tuple[Vocab, Vocab]


def format_pair(pair: CorpusPair, vocabs: Vocabs) -> str:
    src_vocab, tgt_vocab = vocabs
    source = " ".join(src_vocab.token(i) for i in pair.source)
    target = " ".join(tgt_vocab.token(i) for i in pair.target[:-1])
    return f"{source}\t{target}"


def save_corpus(corpus: Sequence[CorpusPair], vocabs: Vocabs, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        for pair in corpus:
            f.write(format_pair(pair, vocabs) + "\n")
    return path


def read_corpus(path: Union[str, Path], vocabs: Vocabs) -> Tuple[List[CorpusPair], int]:
    """Parsed pairs and the count of tokens replaced by UNK."""
    src_vocab, tgt_vocab = vocabs
    pairs: List[CorpusPair] = []
    unknown = 0
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise CorpusParseError(f"expected one tab separator, found {len(fields) - 1}", line=lineno)
        source_tokens, target_tokens = fields[0].split(), fields[1].split()
        if not source_tokens or not target_tokens:
            raise CorpusParseError("empty source or target side", line=lineno)
        source, unk_src = src_vocab.encode(source_tokens)
        target, unk_tgt = tgt_vocab.encode(target_tokens)
        unknown += unk_src + unk_tgt
        pairs.append(CorpusPair(source=source, target=target + [EOS_ID]))
    return pairs, unknown


def load_corpus(path: Union[str, Path], vocabs: Vocabs) -> List[CorpusPair]:
    pairs, unknown = read_corpus(path, vocabs)
    if unknown:
        logger.warning("unknown_tokens", path=str(path), count=unknown)
    return pairs


def split(
    corpus: Sequence[CorpusPair],
    ratios: Tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> Tuple[List[CorpusPair], List[CorpusPair], List[CorpusPair]]:
    """
    Seeded train/dev/test partition. Dev and test get floor(ratio * n);
    the remainder goes to train.
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios) or not math.isclose(sum(ratios), 1.0, abs_tol=1e-9):
        raise SplitError(f"ratios {tuple(ratios)} must be three non-negative numbers summing to 1")
    n = len(corpus)
    n_dev = math.floor(ratios[1] * n + 1e-9)
    n_test = math.floor(ratios[2] * n + 1e-9)
    n_train = n - n_dev - n_test
    order = np.random.default_rng(seed).permutation(n)
    picked = [corpus[i] for i in order]
    return picked[:n_train], picked[n_train:n_train + n_dev], picked[n_train + n_dev:]


def corpus_stats(corpus: Sequence[CorpusPair]) -> Dict[str, float]:
    if not corpus:
        return {"pairs": 0, "mean_source_length": 0.0, "mean_target_length": 0.0, "max_source_length": 0}
    src = [len(p.source) for p in corpus]
    tgt = [len(p.target) - 1 for p in corpus]
    return {
        "pairs": len(corpus),
        "mean_source_length": sum(src) / len(src),
        "mean_target_length": sum(tgt) / len(tgt),
        "max_source_length": max(src),
    }
