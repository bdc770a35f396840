"""N-gram vocabulary: construction, frequency counting, binary persistence.

The vocabulary is the model's sparse feature space: the top-k most frequent
n-grams over a document stream, with dense integer ids. Frequency ties at
the top-k boundary are broken by lexicographic order of the n-gram string
(ascending), so builds are deterministic and implementation-independent.
"""

from __future__ import annotations

import io
import struct
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

from .errors import ConfigError, EmptyCorpusError, IntegrityError, VersionError
from .text import iter_ngrams, tokenize

MAGIC = b"DDVC"
FORMAT_VERSION = 1


class SourceTag(Enum):
    """Which documents produced the stored frequencies."""

    TRAIN_ONLY = 0
    CORPUS_AND_TRAIN = 1


@dataclass(frozen=True)
class VocabEntry:
    ngram: str
    id: int
    frequency: int


@dataclass
class NgramVocab:
    """Ordered n-gram -> id map plus corpus frequencies.

    Immutable once built; safe to share across threads.
    """

    entries: list[VocabEntry]
    n_range: tuple[int, int]
    source_tag: SourceTag = SourceTag.TRAIN_ONLY
    _index: dict[str, int] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self._index = {e.ngram: e.id for e in self.entries}

    def __len__(self):
        return len(self.entries)

    def __contains__(self, ngram):
        return ngram in self._index

    def id_of(self, ngram):
        return self._index.get(ngram)

    def order_of(self, entry_id):
        """N-gram order (token count) of the given vocab id."""
        return self.entries[entry_id].ngram.count(" ") + 1

    def validate(self):
        n_min, n_max = self.n_range
        ids = [e.id for e in self.entries]
        if ids != list(range(len(self.entries))):
            raise ConfigError("vocab ids are not dense [0, |V|)")
        for e in self.entries:
            order = e.ngram.count(" ") + 1
            if not n_min <= order <= n_max:
                raise ConfigError(
                    f"ngram {e.ngram!r} has order {order} outside {self.n_range}"
                )
            if e.frequency < 0:
                raise ConfigError(f"negative frequency for {e.ngram!r}")


@dataclass
class CorpusStats:
    document_count: int = 0
    token_count: int = 0
    distinct_ngrams_per_order: dict[int, int] = field(default_factory=dict)


def _check_n_range(n_range):
    n_min, n_max = n_range
    if n_min < 1 or n_min > n_max:
        raise ConfigError(f"invalid n-gram range {n_range}")


def count_all_ngrams(documents, n_range):
    """Stream documents once and count every n-gram. Returns (Counter, CorpusStats)."""
    _check_n_range(n_range)
    n_min, n_max = n_range
    counts = Counter()
    stats = CorpusStats()
    for doc in documents:
        tokens = tokenize(doc)
        stats.document_count += 1
        stats.token_count += len(tokens)
        counts.update(iter_ngrams(tokens, n_min, n_max))
    per_order = Counter(g.count(" ") + 1 for g in counts)
    stats.distinct_ngrams_per_order = dict(sorted(per_order.items()))
    return counts, stats


def build_vocab(documents, n_range=(1, 4), top_k=1_000_000,
                source_tag=SourceTag.TRAIN_ONLY):
    """Select the top_k most frequent n-grams from a document stream.

    Ties at the frequency boundary break lexicographically ascending on the
    n-gram string. Raises EmptyCorpusError if the stream yields no n-grams.
    """
    if top_k < 1:
        raise ConfigError(f"top_k must be >= 1, got {top_k}")
    counts, _ = count_all_ngrams(documents, n_range)
    if not counts:
        raise EmptyCorpusError("document stream produced no n-grams")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]
    entries = [VocabEntry(g, i, c) for i, (g, c) in enumerate(ranked)]
    return NgramVocab(entries, tuple(n_range), source_tag)


def ngram_frequencies(documents, vocab: NgramVocab):
    """Count each vocab entry over exactly the given documents.

    Ids absent from the documents map to 0.
    """
    n_min, n_max = vocab.n_range
    freqs = {e.id: 0 for e in vocab.entries}
    for doc in documents:
        for gram in iter_ngrams(tokenize(doc), n_min, n_max):
            gid = vocab.id_of(gram)
            if gid is not None:
                freqs[gid] += 1
    return freqs


def write_vocab(vocab: NgramVocab, fh):
    """Serialize to a binary stream (magic, version, header, entries in id order)."""
    fh.write(MAGIC)
    fh.write(struct.pack("<HBBBQ", FORMAT_VERSION, vocab.source_tag.value,
                         vocab.n_range[0], vocab.n_range[1], len(vocab.entries)))
    buf = bytearray()
    for e in vocab.entries:
        raw = e.ngram.encode("utf-8")
        buf += struct.pack("<I", len(raw))
        buf += raw
        buf += struct.pack("<Q", e.frequency)
    fh.write(bytes(buf))


def read_vocab(fh):
    """Inverse of write_vocab. Raises IntegrityError / VersionError."""
    data = fh.read()
    if len(data) < 4 or data[:4] != MAGIC:
        raise IntegrityError("not a vocab file (bad magic)", offset=0)
    off = 4
    header_size = struct.calcsize("<HBBBQ")
    if len(data) < off + header_size:
        raise IntegrityError("truncated vocab header", offset=len(data))
    version, tag, n_min, n_max, count = struct.unpack_from("<HBBBQ", data, off)
    if version != FORMAT_VERSION:
        raise VersionError(f"unsupported vocab format version {version}")
    off += header_size
    entries = []
    for i in range(count):
        if len(data) < off + 4:
            raise IntegrityError(f"truncated at entry {i}", offset=off)
        (nbytes,) = struct.unpack_from("<I", data, off)
        off += 4
        if len(data) < off + nbytes + 8:
            raise IntegrityError(f"truncated at entry {i}", offset=off)
        gram = data[off : off + nbytes].decode("utf-8")
        off += nbytes
        (freq,) = struct.unpack_from("<Q", data, off)
        off += 8
        entries.append(VocabEntry(gram, i, freq))
    if off != len(data):
        raise IntegrityError("trailing bytes after last entry", offset=off)
    vocab = NgramVocab(entries, (n_min, n_max), SourceTag(tag))
    vocab.validate()
    return vocab


def save_vocab(vocab: NgramVocab, path):
    with open(path, "wb") as fh:
        write_vocab(vocab, fh)


def load_vocab(path) -> NgramVocab:
    with open(path, "rb") as fh:
        return read_vocab(fh)


def vocab_to_bytes(vocab: NgramVocab) -> bytes:
    buf = io.BytesIO()
    write_vocab(vocab, buf)
    return buf.getvalue()


def vocab_from_bytes(blob: bytes) -> NgramVocab:
    return read_vocab(io.BytesIO(blob))
