"""Text -> n-gram id lists under a vocabulary, with coverage statistics.

This is the hot path at inference time: hashmap lookups over whitespace
tokens, linear in the input length.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError, DandistillError
from .text import iter_ngrams, tokenize
from .vocab import NgramVocab


@dataclass
class FeaturizedExample:
    """N-gram id multiset for one input plus coverage counters.

    ids preserves extraction order and duplicates; total_ngrams counts every
    extracted n-gram whether or not it is in vocab.
    """

    ids: list[int]
    total_ngrams: int
    matched_ngrams: int
    label: Optional[int] = None
    teacher_probs: Optional[list[float]] = None


@dataclass
class PairExample:
    left: FeaturizedExample
    right: FeaturizedExample
    label: Optional[int] = None
    teacher_probs: Optional[list[float]] = None


def featurize(text, vocab: NgramVocab, n_cutoff=None, label=None,
              teacher_probs=None) -> FeaturizedExample:
    """Extract in-vocab n-gram ids from text.

    n_cutoff, if given, disables n-grams of order > n_cutoff for both the
    id list and the coverage denominator.
    """
    n_min, n_max = vocab.n_range
    if n_cutoff is not None:
        if not n_min <= n_cutoff <= n_max:
            raise ConfigError(f"n_cutoff {n_cutoff} outside vocab n_range {vocab.n_range}")
        n_max = n_cutoff
    tokens = tokenize(text)
    ids = []
    total = 0
    id_of = vocab.id_of
    for gram in iter_ngrams(tokens, n_min, n_max):
        total += 1
        gid = id_of(gram)
        if gid is not None:
            ids.append(gid)
    return FeaturizedExample(ids=ids, total_ngrams=total, matched_ngrams=len(ids),
                             label=label, teacher_probs=teacher_probs)


def featurize_pair(text1, text2, vocab, n_cutoff=None, label=None,
                   teacher_probs=None) -> PairExample:
    return PairExample(
        left=featurize(text1, vocab, n_cutoff),
        right=featurize(text2, vocab, n_cutoff),
        label=label,
        teacher_probs=teacher_probs,
    )


def coverage_ratio(ex: FeaturizedExample) -> float:
    """Fraction of the input's n-grams found in vocab: matched / total."""
    if ex.total_ngrams == 0:
        raise DandistillError("coverage undefined: example has no n-grams")
    return ex.matched_ngrams / ex.total_ngrams


_WORKER_VOCAB = None
_WORKER_CUTOFF = None


def _pool_init(vocab, n_cutoff):
    global _WORKER_VOCAB, _WORKER_CUTOFF
    _WORKER_VOCAB = vocab
    _WORKER_CUTOFF = n_cutoff


def _pool_featurize(text):
    return featurize(text, _WORKER_VOCAB, _WORKER_CUTOFF)


def featurize_stream(documents, vocab, workers=1, n_cutoff=None):
    """Order-preserving batch featurization; equals mapping featurize."""
    if workers <= 1:
        for doc in documents:
            yield featurize(doc, vocab, n_cutoff)
        return
    import multiprocessing

    with multiprocessing.Pool(workers, initializer=_pool_init,
                              initargs=(vocab, n_cutoff)) as pool:
        yield from pool.imap(_pool_featurize, documents, chunksize=64)
