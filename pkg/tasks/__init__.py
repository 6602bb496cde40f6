"""Synthetic parallel corpora, vocabularies and corpus files."""
from tasks.corpus_io import corpus_stats, load_corpus, save_corpus, split
from tasks.generator import alignment, generate, is_monotone, task_vocabs
from tasks.vocab import Vocab

__all__ = [
    "Vocab",
    "alignment",
    "corpus_stats",
    "generate",
    "is_monotone",
    "load_corpus",
    "save_corpus",
    "split",
    "task_vocabs",
]
