"""End-to-end orchestration: vocab -> KD -> FT, with per-stage artifacts.

Stages are toggleable: KD-only (privacy mode, soft labels over the corpus
and no task train text read), FT-only (from-scratch baseline), or KD+FT.
One top-level seed derives all stage seeds by fixed offsets so stages are
individually reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

from . import data
from .errors import ConfigError
from .model import init_model, serialize
from .optim import FT, KD, TrainConfig, train
from .plots import plot_metrics
from .vocab import SourceTag, build_vocab, save_vocab

MODEL_SEED_OFFSET = 0
KD_SEED_OFFSET = 1
FT_SEED_OFFSET = 2


@dataclass
class StageParams:
    lr: float
    batch_size: int
    epochs: int = 1
    eval_interval: int | None = None
    temperature: float = 1.0


@dataclass
class PipelineConfig:
    outdir: str
    seed: int = 0
    corpus: str | None = None
    train: str | None = None
    dev: str | None = None
    soft_labels: str | None = None
    # vocab
    n_min: int = 1
    n_max: int = 4
    top_k: int = 1_000_000
    vocab_source: str = "auto"  # train | corpus | corpus+train | auto
    # model
    d_e: int = 64
    hidden: tuple = (1000,)
    pooling: str = "mean"
    n_classes: int | None = None
    d_a: int | None = None
    pair_mode: bool = False
    # stages
    kd: bool = True
    ft: bool = True
    kd_params: StageParams = field(default_factory=lambda: StageParams(lr=5e-4, batch_size=256))
    ft_params: StageParams = field(default_factory=lambda: StageParams(lr=1e-4, batch_size=32))

    @classmethod
    def from_toml(cls, path):
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
        paths = raw.get("paths", {})
        vocab = raw.get("vocab", {})
        model = raw.get("model", {})
        stages = raw.get("stages", {})
        cfg = cls(
            outdir=paths.get("outdir", "."),
            seed=raw.get("seed", 0),
            corpus=paths.get("corpus"),
            train=paths.get("train"),
            dev=paths.get("dev"),
            soft_labels=paths.get("soft_labels"),
            n_min=vocab.get("nmin", 1),
            n_max=vocab.get("nmax", 4),
            top_k=vocab.get("topk", 1_000_000),
            vocab_source=vocab.get("source", "auto"),
            d_e=model.get("d_e", 64),
            hidden=tuple(model.get("hidden", [1000])),
            pooling=model.get("pooling", "mean"),
            n_classes=model.get("n_classes"),
            d_a=model.get("d_a"),
            pair_mode=model.get("pair_mode", False),
            kd=stages.get("kd", True),
            ft=stages.get("ft", True),
        )
        for name, default in (("kd", cfg.kd_params), ("ft", cfg.ft_params)):
            section = raw.get(name, {})
            params = StageParams(
                lr=section.get("lr", default.lr),
                batch_size=section.get("batch_size", default.batch_size),
                epochs=section.get("epochs", default.epochs),
                eval_interval=section.get("eval_interval"),
                temperature=section.get("temperature", 1.0),
            )
            if name == "kd":
                cfg.kd_params = params
            else:
                cfg.ft_params = params
        return cfg


def _require(cfg, attr, flag):
    value = getattr(cfg, attr)
    if value is None:
        raise ConfigError(f"missing input: set {flag}")
    if not Path(value).exists():
        raise ConfigError(f"input file for {flag} does not exist: {value}")
    return value


def _infer_n_classes(cfg):
    if cfg.n_classes is not None:
        return cfg.n_classes
    if cfg.kd and cfg.soft_labels:
        for _, obj in data.read_jsonl(cfg.soft_labels):
            return len(obj["probs"])
    if cfg.train:
        labels = [obj.get("label") for _, obj in data.read_jsonl(cfg.train)]
        return max(x for x in labels if x is not None) + 1
    raise ConfigError("cannot infer n_classes; set model.n_classes")


def run_pipeline(cfg: PipelineConfig, overwrite=False):
    """Execute enabled stages in order; returns a dict of artifact paths."""
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    artifacts = {}
    planned = [outdir / "vocab.bin"]
    if cfg.kd:
        planned += [outdir / "student.bin", outdir / "kd_metrics.csv"]
    if cfg.ft:
        planned += [outdir / "student_ft.bin", outdir / "ft_metrics.csv"]
    existing = [p for p in planned if p.exists()]
    if existing and not overwrite:
        raise ConfigError(
            f"outputs already exist ({existing[0]}, ...); pass --overwrite to replace")

    if not cfg.kd and not cfg.ft:
        raise ConfigError("no stage enabled: set stages.kd and/or stages.ft")
    if cfg.kd:
        _require(cfg, "soft_labels", "--soft-labels")

    # vocab sources: privacy KD-only mode never reads the task train text
    source = cfg.vocab_source
    if source == "auto":
        if cfg.corpus and cfg.train and cfg.ft:
            source = "corpus+train"
        elif cfg.corpus:
            source = "corpus"
        else:
            source = "train"
    docs = []
    if "corpus" in source:
        docs += data.load_texts(_require(cfg, "corpus", "--corpus"))
    if "train" in source:
        docs += data.load_texts(_require(cfg, "train", "--train"))
    tag = SourceTag.TRAIN_ONLY if source == "train" else SourceTag.CORPUS_AND_TRAIN
    vocab = build_vocab(docs, (cfg.n_min, cfg.n_max), cfg.top_k, source_tag=tag)
    vocab_path = outdir / "vocab.bin"
    save_vocab(vocab, vocab_path)
    artifacts["vocab"] = vocab_path

    n_classes = _infer_n_classes(cfg)
    model = init_model(vocab, cfg.d_e, hidden=cfg.hidden, n_classes=n_classes,
                       pooling=cfg.pooling, pair_mode=cfg.pair_mode, d_a=cfg.d_a,
                       seed=cfg.seed + MODEL_SEED_OFFSET)

    dev = None
    if cfg.dev:
        dev = data.load_examples(cfg.dev, vocab, require="label")

    if cfg.kd:
        kd_examples = data.load_examples(cfg.soft_labels, vocab, require="probs")
        params = cfg.kd_params
        result = train(model, kd_examples,
                       TrainConfig(mode=KD, lr=params.lr,
                                   batch_size=params.batch_size,
                                   epochs=params.epochs,
                                   eval_interval=params.eval_interval,
                                   temperature=params.temperature,
                                   seed=cfg.seed + KD_SEED_OFFSET),
                       dev=dev)
        model = result.model
        serialize(model, outdir / "student.bin")
        data.write_metrics_csv(outdir / "kd_metrics.csv", result.metrics)
        plot_metrics(result.metrics, outdir / "kd_metrics.png")
        artifacts["student"] = outdir / "student.bin"
        artifacts["kd_metrics"] = outdir / "kd_metrics.csv"

    if cfg.ft:
        ft_examples = data.load_examples(_require(cfg, "train", "--train"), vocab,
                                         require="label")
        params = cfg.ft_params
        result = train(model, ft_examples,
                       TrainConfig(mode=FT, lr=params.lr,
                                   batch_size=params.batch_size,
                                   epochs=params.epochs,
                                   eval_interval=params.eval_interval,
                                   seed=cfg.seed + FT_SEED_OFFSET),
                       dev=dev)
        serialize(result.model, outdir / "student_ft.bin")
        data.write_metrics_csv(outdir / "ft_metrics.csv", result.metrics)
        plot_metrics(result.metrics, outdir / "ft_metrics.png")
        artifacts["student_ft"] = outdir / "student_ft.bin"
        artifacts["ft_metrics"] = outdir / "ft_metrics.csv"
    return artifacts
