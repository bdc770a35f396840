"""Post-hoc model shrinking: drop least-frequent n-grams, evaluate order cutoffs.

Pruning rebuilds a dense id space (rather than masking rows) so the model
file shrinks proportionally. Surviving rows are copied bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError
from .featurize import featurize
from .model import DanModel
from .optim import evaluate
from .vocab import NgramVocab, SourceTag, VocabEntry


@dataclass
class PruneSpec:
    frequencies: dict  # vocab id -> count
    keep_fraction: Optional[float] = None
    keep_count: Optional[int] = None
    frequency_source: SourceTag = SourceTag.TRAIN_ONLY

    def resolve_keep_count(self, vocab_size):
        if (self.keep_fraction is None) == (self.keep_count is None):
            raise ConfigError("set exactly one of keep_fraction / keep_count")
        if self.keep_fraction is not None:
            if not 0.0 < self.keep_fraction <= 1.0:
                raise ConfigError(f"keep_fraction {self.keep_fraction} outside (0, 1]")
            return math.ceil(self.keep_fraction * vocab_size)
        if self.keep_count < 1:
            raise ConfigError("keep_count must be >= 1")
        if self.keep_count > vocab_size:
            raise ConfigError(
                f"keep_count {self.keep_count} exceeds vocab size {vocab_size}")
        return self.keep_count


def prune_model(model: DanModel, spec: PruneSpec) -> DanModel:
    """Keep the most frequent entries, re-densify ids, copy their rows.

    Ties at the frequency boundary break lexicographically, same as vocab
    building. The dense head is untouched.
    """
    vocab = model.vocab
    keep = spec.resolve_keep_count(len(vocab))
    missing = [e.id for e in vocab.entries if e.id not in spec.frequencies]
    if missing:
        raise ConfigError(f"frequencies missing for {len(missing)} vocab ids")
    ranked = sorted(vocab.entries,
                    key=lambda e: (-spec.frequencies[e.id], e.ngram))[:keep]
    kept = sorted(ranked, key=lambda e: e.id)  # preserve relative id order
    entries = [VocabEntry(e.ngram, new_id, e.frequency)
               for new_id, e in enumerate(kept)]
    new_vocab = NgramVocab(entries, vocab.n_range, spec.frequency_source)
    old_ids = [e.id for e in kept]
    new_emb = model.embedding[old_ids].copy()
    return DanModel(new_vocab, new_emb,
                    [(w.copy(), b.copy()) for w, b in model.layers],
                    model.pooling, model.pair_mode, model.attentive)


def prune_sweep(model, frequencies, fractions, dev_texts, dev_labels,
                frequency_source=SourceTag.TRAIN_ONLY, n_cutoff=None):
    """Accuracy-vs-size curve: evaluate prune_model at each keep fraction.

    dev examples are re-featurized under each pruned vocab. Returns rows of
    (fraction, params, dev_accuracy).
    """
    rows = []
    for fraction in fractions:
        spec = PruneSpec(frequencies=frequencies, keep_fraction=fraction,
                         frequency_source=frequency_source)
        pruned = prune_model(model, spec)
        dev = [featurize(t, pruned.vocab, n_cutoff, label=y)
               for t, y in zip(dev_texts, dev_labels)]
        _, acc = evaluate(pruned, dev)
        total, _, _ = pruned.param_count()
        rows.append({"fraction": fraction, "params": total, "dev_accuracy": acc})
    return rows


def cutoff_eval(model, dev_texts, dev_labels, n_cutoffs):
    """Per n-gram-order cutoff: effective vocab size and dev accuracy."""
    n_min, n_max = model.vocab.n_range
    rows = []
    for cutoff in n_cutoffs:
        if not n_min <= cutoff <= n_max:
            raise ConfigError(f"cutoff {cutoff} outside vocab n_range {model.vocab.n_range}")
        effective = sum(1 for e in model.vocab.entries
                        if e.ngram.count(" ") + 1 <= cutoff)
        dev = [featurize(t, model.vocab, cutoff, label=y)
               for t, y in zip(dev_texts, dev_labels)]
        _, acc = evaluate(model, dev)
        rows.append({"n_cutoff": cutoff, "effective_vocab": effective,
                     "accuracy": acc})
    return rows
