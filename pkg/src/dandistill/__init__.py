"""Fast n-gram text classifiers distilled from large teachers."""

from .analysis import (BenchReport, CoverageReport, SweepRecipe,
                       bench_inference, budget_sweep, coverage_vs_loss)
from .featurize import (FeaturizedExample, PairExample, coverage_ratio,
                        featurize, featurize_pair, featurize_stream)
from .model import (AttentiveHead, DanModel, ForwardTrace, deserialize,
                    init_model, param_count, serialize, softmax)
from .optim import (FT, KD, Gradients, TrainConfig, TrainState, backward,
                    evaluate, ft_loss, hybrid_adam_step, kd_loss, train)
from .prune import PruneSpec, cutoff_eval, prune_model, prune_sweep
from .vocab import (NgramVocab, SourceTag, build_vocab, load_vocab,
                    ngram_frequencies, save_vocab)

__all__ = [
    "AttentiveHead", "BenchReport", "CoverageReport", "SweepRecipe",
    "bench_inference", "budget_sweep", "coverage_vs_loss",
    "DanModel", "FeaturizedExample", "ForwardTrace",
    "Gradients", "NgramVocab", "PairExample", "PruneSpec", "SourceTag",
    "TrainConfig", "TrainState", "FT", "KD", "backward", "build_vocab",
    "coverage_ratio", "cutoff_eval", "deserialize", "evaluate", "featurize",
    "featurize_pair", "featurize_stream", "ft_loss", "hybrid_adam_step",
    "init_model", "kd_loss", "load_vocab", "ngram_frequencies", "param_count",
    "prune_model", "prune_sweep", "save_vocab", "serialize", "softmax", "train",
]

__version__ = "0.1.0"
