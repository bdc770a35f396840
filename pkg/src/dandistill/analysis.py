"""Coverage-vs-loss bucketing, vocab/dim budget sweeps, inference benchmarking."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, DandistillError
from .featurize import featurize
from .model import init_model
from .optim import TrainConfig, evaluate, ft_loss, train
from .vocab import build_vocab

BUCKET_WIDTH = 0.1


@dataclass
class CoverageBucket:
    lo: float
    hi: float
    count: int
    median_loss: float
    q1_loss: float
    q3_loss: float


@dataclass
class CoverageReport:
    buckets: list[CoverageBucket]
    zero_coverage_count: int
    histogram: list[int]  # example count per decile


@dataclass
class BenchReport:
    samples_per_second: float
    batch_size: int
    precision: str
    device_note: str
    warmup_batches: int
    measured_batches: int
    include_featurize: bool
    latency_p50_ms: float
    latency_p90_ms: float
    latency_p99_ms: float

    def to_dict(self):
        return dict(self.__dict__)


def coverage_vs_loss(model, dev_examples) -> CoverageReport:
    """Bucket dev examples by n-gram coverage (deciles) and summarize the
    per-example cross-entropy loss vs ground truth in each bucket.

    Examples with no n-grams at all are counted separately, not bucketed.
    """
    per_bucket = [[] for _ in range(10)]
    zero = 0
    for ex in dev_examples:
        if ex.total_ngrams == 0:
            zero += 1
            continue
        cov = ex.matched_ngrams / ex.total_ngrams
        b = min(int(cov / BUCKET_WIDTH), 9)  # coverage 1.0 lands in [0.9, 1.0]
        probs = model.forward_batch([ex])[0]
        per_bucket[b].append(ft_loss(ex.label, probs))
    buckets = []
    for b, losses in enumerate(per_bucket):
        if not losses:
            continue
        q1, med, q3 = np.percentile(losses, [25, 50, 75])
        buckets.append(CoverageBucket(lo=b * BUCKET_WIDTH, hi=(b + 1) * BUCKET_WIDTH,
                                      count=len(losses), median_loss=float(med),
                                      q1_loss=float(q1), q3_loss=float(q3)))
    return CoverageReport(buckets=buckets, zero_coverage_count=zero,
                          histogram=[len(b) for b in per_bucket])


@dataclass
class SweepRecipe:
    """How to train each configuration in a budget sweep."""

    n_range: tuple = (1, 2)
    hidden: tuple = (64,)
    pooling: str = "mean"
    train_config: TrainConfig = field(default_factory=TrainConfig)
    n_classes: int = 2
    seed: int = 0


def budget_sweep(configs, train_texts, train_labels, dev_texts, dev_labels,
                 recipe: SweepRecipe):
    """Train one student per (|V|, d_e) config under identical data/recipe.

    Per-config failures are recorded in the output row and the sweep continues.
    """
    rows = []
    for vocab_size, d_e in configs:
        row = {"vocab_size": vocab_size, "d_e": d_e, "params": None,
               "accuracy": None, "error": None}
        try:
            vocab = build_vocab(train_texts, recipe.n_range, top_k=vocab_size)
            model = init_model(vocab, d_e, hidden=recipe.hidden,
                               n_classes=recipe.n_classes, pooling=recipe.pooling,
                               seed=recipe.seed)
            train_ex = [featurize(t, vocab, label=y)
                        for t, y in zip(train_texts, train_labels)]
            dev_ex = [featurize(t, vocab, label=y)
                      for t, y in zip(dev_texts, dev_labels)]
            result = train(model, train_ex, recipe.train_config, dev=dev_ex)
            _, acc = evaluate(result.model, dev_ex)
            total, _, _ = result.model.param_count()
            row["params"] = total
            row["accuracy"] = acc
        except DandistillError as exc:
            row["error"] = str(exc)
        rows.append(row)
    return rows


def bench_inference(model, dataset, batch_size=32, warmup=5, iters=50,
                    include_featurize=False, precision="fp32",
                    device_note="cpu single-thread",
                    raw_texts: Optional[list] = None) -> BenchReport:
    """Steady-state samples/second after warmup.

    dataset: featurized examples. When include_featurize is set, raw_texts
    must be given and tokenization + lookup time is measured inside the loop.
    Model load time is excluded; softmax is included.
    """
    if precision == "fp32":
        bench_model = model.astype(np.float32)
    elif precision == "fp16":
        bench_model = model.astype(np.float16)
    else:
        raise ConfigError(f"unknown precision {precision!r}")
    if len(dataset) < batch_size:
        raise ConfigError(
            f"dataset of {len(dataset)} examples is smaller than one batch ({batch_size})")
    if include_featurize and raw_texts is None:
        raise ConfigError("include_featurize requires raw_texts")
    if iters < 10:
        raise ConfigError("need at least 10 measured batches")

    n = len(dataset)
    vocab = bench_model.vocab

    def run_batch(i):
        start = (i * batch_size) % (n - batch_size + 1)
        if include_featurize:
            batch = [featurize(t, vocab) for t in raw_texts[start : start + batch_size]]
        else:
            batch = dataset[start : start + batch_size]
        bench_model.forward_batch(batch)

    for i in range(warmup):
        run_batch(i)
    latencies = []
    for i in range(iters):
        t0 = time.perf_counter()
        run_batch(i)
        latencies.append(time.perf_counter() - t0)
    total = sum(latencies)
    p50, p90, p99 = np.percentile(latencies, [50, 90, 99])
    return BenchReport(
        samples_per_second=batch_size * iters / total,
        batch_size=batch_size,
        precision=precision,
        device_note=device_note,
        warmup_batches=warmup,
        measured_batches=iters,
        include_featurize=include_featurize,
        latency_p50_ms=float(p50) * 1e3,
        latency_p90_ms=float(p90) * 1e3,
        latency_p99_ms=float(p99) * 1e3,
    )
