import json

import numpy as np
import pytest

from dandistill import build_vocab, featurize, init_model

ACCEPTANCE_CHECKLIST = []


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion in the final report."""
    if ACCEPTANCE_CHECKLIST:
        terminalreporter.write_sep("-", "acceptance checklist")
        for name, ok in ACCEPTANCE_CHECKLIST:
            terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}")


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


class UnigramTask:
    """Synthetic 2-class task whose labels are a fixed function of unigram
    presence: label = [sum of word weights > 0]. The generating rule doubles
    as a Bayes-optimal oracle teacher with closed-form soft labels."""

    def __init__(self, seed=0, n_words=60, n_signal=20, doc_len=20,
                 min_margin=2.0, teacher_sharpness=1.5, word_probs=None):
        rng = np.random.default_rng(seed)
        self.words = [f"w{i:03d}" for i in range(n_words)]
        self.weights = np.zeros(n_words)
        self.weights[: n_signal // 2] = 1.0
        self.weights[n_signal // 2 : n_signal] = -1.0
        self.doc_len = doc_len
        self.min_margin = min_margin
        self.sharpness = teacher_sharpness
        self.word_probs = word_probs
        self._rng = rng

    def sample(self, n_docs, rng=None):
        rng = rng or self._rng
        texts, labels = [], []
        while len(texts) < n_docs:
            toks = rng.choice(len(self.words), size=self.doc_len, p=self.word_probs)
            score = self.weights[toks].sum()
            if abs(score) < self.min_margin:
                continue
            texts.append(" ".join(self.words[t] for t in toks))
            labels.append(int(score > 0))
        return texts, labels

    def score(self, text):
        idx = {w: i for i, w in enumerate(self.words)}
        return sum(self.weights[idx[t]] for t in text.split() if t in idx)

    def teacher_probs(self, text):
        p1 = sigmoid(self.sharpness * self.score(text))
        return [1.0 - p1, p1]


class BigramTask:
    """Labels decided by bigram order only: class 1 docs contain the bigram
    'pos neg', class 0 docs contain 'neg pos'; unigram counts are identical
    across classes by construction."""

    def __init__(self, seed=0, n_filler=30, doc_len=12, n_markers=2):
        self._rng = np.random.default_rng(seed)
        self.filler = [f"f{i:02d}" for i in range(n_filler)]
        self.doc_len = doc_len
        self.n_markers = n_markers

    def sample(self, n_docs, rng=None):
        rng = rng or self._rng
        texts, labels = [], []
        for _ in range(n_docs):
            label = int(rng.integers(2))
            marker = "pos neg" if label else "neg pos"
            toks = list(rng.choice(self.filler, size=self.doc_len))
            for _ in range(self.n_markers):
                pos = int(rng.integers(len(toks) + 1))
                toks.insert(pos, marker)
            texts.append(" ".join(toks))
            labels.append(label)
        return texts, labels


@pytest.fixture
def unigram_task():
    return UnigramTask(seed=7)


@pytest.fixture
def bigram_task():
    return BigramTask(seed=11)


def write_soft_labels(path, texts, probs):
    """Test-harness soft-label file writer (stands in for a real teacher)."""
    with open(path, "w", encoding="utf-8") as fh:
        for text, p in zip(texts, probs):
            fh.write(json.dumps({"text": text, "probs": list(p)}) + "\n")


def featurize_all(texts, vocab, labels=None, probs=None, n_cutoff=None):
    out = []
    for i, text in enumerate(texts):
        out.append(featurize(text, vocab, n_cutoff,
                             label=None if labels is None else labels[i],
                             teacher_probs=None if probs is None else probs[i]))
    return out


def tiny_model(seed=0, pooling="mean", pair_mode=False, d_e=3, hidden=(4,),
               n_classes=2, docs=None, n_range=(1, 2), d_a=None):
    docs = docs or ["a b c d", "b c d e a", "c a a b"]
    vocab = build_vocab(docs, n_range, top_k=50)
    model = init_model(vocab, d_e, hidden=hidden, n_classes=n_classes,
                       pooling=pooling, pair_mode=pair_mode, d_a=d_a, seed=seed)
    return vocab, model
