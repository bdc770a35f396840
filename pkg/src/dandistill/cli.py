"""Single entry-point CLI exposing all subcommands.

Report commands write a delimited file and render a companion matplotlib
figure next to it; --json switches machine-readable output on.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import click

from . import analysis as analysis_mod
from . import data as data_mod
from . import prune as prune_mod
from .errors import DandistillError
from .featurize import coverage_ratio, featurize_stream
from .model import deserialize, init_model, serialize
from .optim import FT, KD, TrainConfig, train
from .pipeline import KD_SEED_OFFSET, FT_SEED_OFFSET, PipelineConfig, run_pipeline
from .plots import (plot_budget_sweep, plot_coverage, plot_cutoff_eval,
                    plot_metrics, plot_prune_sweep)
from .vocab import SourceTag, build_vocab, load_vocab, ngram_frequencies, save_vocab


def default_workers():
    return int(os.environ.get("DANDISTILL_WORKERS", "1"))


def _write_csv(path, rows, columns):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row[c] for c in columns])


def _fig_path(csv_path):
    return Path(csv_path).with_suffix(".png")


@click.group()
def main():
    """Fast n-gram text classifiers: vocab, distillation, pruning, benchmarks."""


# -- vocab --------------------------------------------------------------
@main.group("vocab")
def vocab_group():
    """Build and inspect n-gram vocabularies."""


@vocab_group.command("build")
@click.option("--input", "inputs", multiple=True, required=True,
              type=click.Path(exists=True), help="Text or JSONL files.")
@click.option("--nmin", default=1, show_default=True)
@click.option("--nmax", default=4, show_default=True)
@click.option("--topk", default=1_000_000, show_default=True)
@click.option("--source-tag", type=click.Choice(["train", "corpus+train"]),
              default="train", show_default=True)
@click.option("--out", required=True, type=click.Path())
def vocab_build(inputs, nmin, nmax, topk, source_tag, out):
    """Count n-grams over the inputs and keep the top-k most frequent."""
    def docs():
        for path in inputs:
            yield from data_mod.load_texts(path)

    tag = SourceTag.TRAIN_ONLY if source_tag == "train" else SourceTag.CORPUS_AND_TRAIN
    vocab = build_vocab(docs(), (nmin, nmax), topk, source_tag=tag)
    save_vocab(vocab, out)
    click.echo(f"wrote {len(vocab)} entries to {out}")


@vocab_group.command("stats")
@click.option("--vocab", "vocab_path", required=True, type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True)
def vocab_stats(vocab_path, as_json):
    """Entry counts per n-gram order and frequency summary."""
    vocab = load_vocab(vocab_path)
    per_order = {}
    for e in vocab.entries:
        per_order[e.ngram.count(" ") + 1] = per_order.get(e.ngram.count(" ") + 1, 0) + 1
    stats = {
        "size": len(vocab),
        "n_range": list(vocab.n_range),
        "source_tag": vocab.source_tag.name.lower(),
        "entries_per_order": {str(k): v for k, v in sorted(per_order.items())},
        "min_frequency": min(e.frequency for e in vocab.entries),
        "max_frequency": max(e.frequency for e in vocab.entries),
    }
    if as_json:
        click.echo(json.dumps(stats))
    else:
        for key, value in stats.items():
            click.echo(f"{key}: {value}")


# -- featurize ----------------------------------------------------------
@main.command("featurize")
@click.option("--vocab", "vocab_path", required=True, type=click.Path(exists=True))
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--ncutoff", type=int, default=None)
@click.option("--workers", type=int, default=None)
@click.option("--stats-out", type=click.Path(), default=None,
              help="Write per-example coverage stats as CSV.")
@click.option("--json", "as_json", is_flag=True)
def featurize_cmd(vocab_path, input_path, ncutoff, workers, stats_out, as_json):
    """Featurize a dataset and report coverage statistics."""
    vocab = load_vocab(vocab_path)
    texts = data_mod.load_texts(input_path)
    workers = workers if workers is not None else default_workers()
    rows = []
    for i, ex in enumerate(featurize_stream(texts, vocab, workers, ncutoff)):
        cov = coverage_ratio(ex) if ex.total_ngrams else float("nan")
        rows.append({"index": i, "total_ngrams": ex.total_ngrams,
                     "matched_ngrams": ex.matched_ngrams,
                     "coverage": f"{cov:.6f}"})
    if stats_out:
        _write_csv(stats_out, rows, ["index", "total_ngrams", "matched_ngrams",
                                     "coverage"])
    covered = [float(r["coverage"]) for r in rows if r["total_ngrams"] > 0]
    summary = {
        "examples": len(rows),
        "mean_coverage": sum(covered) / len(covered) if covered else None,
        "zero_ngram_examples": sum(1 for r in rows if r["total_ngrams"] == 0),
    }
    click.echo(json.dumps(summary) if as_json else
               f"featurized {summary['examples']} examples, "
               f"mean coverage {summary['mean_coverage']}")


# -- training -----------------------------------------------------------
def _read_model_config(path):
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    return raw


@main.group("train")
def train_group():
    """Distillation (kd) and fine-tuning (ft) stages."""


@train_group.command("kd")
@click.option("--model-config", required=True, type=click.Path(exists=True),
              help="TOML with [model] and [kd] sections.")
@click.option("--vocab", "vocab_path", required=True, type=click.Path(exists=True))
@click.option("--soft-labels", required=True, type=click.Path(exists=True))
@click.option("--dev", type=click.Path(exists=True), default=None)
@click.option("--out", required=True, type=click.Path())
@click.option("--metrics-out", type=click.Path(), default=None)
@click.option("--seed", type=int, default=0, show_default=True)
def train_kd(model_config, vocab_path, soft_labels, dev, out, metrics_out, seed):
    """Train a student to mimic teacher soft labels."""
    raw = _read_model_config(model_config)
    model_cfg = raw.get("model", {})
    stage = raw.get("kd", {})
    vocab = load_vocab(vocab_path)
    examples = data_mod.load_examples(soft_labels, vocab, require="probs")
    n_classes = model_cfg.get("n_classes") or len(examples[0].teacher_probs)
    model = init_model(vocab, model_cfg.get("d_e", 64),
                       hidden=tuple(model_cfg.get("hidden", [1000])),
                       n_classes=n_classes,
                       pooling=model_cfg.get("pooling", "mean"),
                       pair_mode=model_cfg.get("pair_mode", False),
                       d_a=model_cfg.get("d_a"), seed=seed)
    dev_ex = data_mod.load_examples(dev, vocab, require="label") if dev else None
    result = train(model, examples,
                   TrainConfig(mode=KD, lr=stage.get("lr", 5e-4),
                               batch_size=stage.get("batch_size", 256),
                               epochs=stage.get("epochs", 1),
                               eval_interval=stage.get("eval_interval"),
                               temperature=stage.get("temperature", 1.0),
                               seed=seed + KD_SEED_OFFSET),
                   dev=dev_ex)
    serialize(result.model, out)
    if metrics_out:
        data_mod.write_metrics_csv(metrics_out, result.metrics)
        plot_metrics(result.metrics, _fig_path(metrics_out))
    click.echo(f"wrote {out}"
               + (f" (best dev acc {result.best_dev_accuracy:.4f})"
                  if result.best_dev_accuracy is not None else ""))


@train_group.command("ft")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--train", "train_path", required=True, type=click.Path(exists=True))
@click.option("--dev", type=click.Path(exists=True), default=None)
@click.option("--out", required=True, type=click.Path())
@click.option("--metrics-out", type=click.Path(), default=None)
@click.option("--lr", type=float, default=1e-4, show_default=True)
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--epochs", type=int, default=10, show_default=True)
@click.option("--eval-interval", type=int, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
def train_ft(model_path, train_path, dev, out, metrics_out, lr, batch_size,
             epochs, eval_interval, seed):
    """Fine-tune an existing student on labeled task data."""
    model = deserialize(model_path)
    examples = data_mod.load_examples(train_path, model.vocab, require="label")
    dev_ex = data_mod.load_examples(dev, model.vocab, require="label") if dev else None
    result = train(model, examples,
                   TrainConfig(mode=FT, lr=lr, batch_size=batch_size,
                               epochs=epochs, eval_interval=eval_interval,
                               seed=seed + FT_SEED_OFFSET),
                   dev=dev_ex)
    serialize(result.model, out)
    if metrics_out:
        data_mod.write_metrics_csv(metrics_out, result.metrics)
        plot_metrics(result.metrics, _fig_path(metrics_out))
    click.echo(f"wrote {out}"
               + (f" (best dev acc {result.best_dev_accuracy:.4f})"
                  if result.best_dev_accuracy is not None else ""))


# -- inference ----------------------------------------------------------
@main.command("predict")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--ncutoff", type=int, default=None)
@click.option("--batch-size", type=int, default=32, show_default=True)
def predict_cmd(model_path, input_path, out, ncutoff, batch_size):
    """Emit {"probs": [...], "pred": int} per input line."""
    model = deserialize(model_path)
    examples = data_mod.load_examples(input_path, model.vocab, n_cutoff=ncutoff)
    records = []
    for start in range(0, len(examples), batch_size):
        probs = model.forward_batch(examples[start : start + batch_size])
        for p in probs:
            records.append({"probs": [float(x) for x in p], "pred": int(p.argmax())})
    data_mod.write_jsonl(out, records)
    click.echo(f"wrote {len(records)} predictions to {out}")


# -- pruning ------------------------------------------------------------
def _frequencies_for(model, freq_source, train_path, corpus_path):
    texts = []
    if freq_source in ("train", "corpus+train"):
        if not train_path:
            raise click.UsageError("--train is required for this --freq-source")
        texts += data_mod.load_texts(train_path)
    if freq_source == "corpus+train":
        if not corpus_path:
            raise click.UsageError("--corpus is required for freq-source corpus+train")
        texts += data_mod.load_texts(corpus_path)
    tag = (SourceTag.TRAIN_ONLY if freq_source == "train"
           else SourceTag.CORPUS_AND_TRAIN)
    return ngram_frequencies(texts, model.vocab), tag


@main.group("prune", invoke_without_command=True)
@click.option("--model", "model_path", type=click.Path(exists=True))
@click.option("--freq-source", type=click.Choice(["train", "corpus+train"]),
              default="train", show_default=True)
@click.option("--train", "train_path", type=click.Path(exists=True), default=None)
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), default=None)
@click.option("--keep", type=float, default=None,
              help="Keep fraction in (0,1] or an integer count if > 1.")
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def prune_group(ctx, model_path, freq_source, train_path, corpus_path, keep, out):
    """Drop least-frequent n-grams from a trained model."""
    if ctx.invoked_subcommand is not None:
        return
    if not (model_path and keep is not None and out):
        raise click.UsageError("need --model, --keep and --out (or a subcommand)")
    model = deserialize(model_path)
    freqs, tag = _frequencies_for(model, freq_source, train_path, corpus_path)
    if keep > 1:
        spec = prune_mod.PruneSpec(frequencies=freqs, keep_count=int(keep),
                                   frequency_source=tag)
    else:
        spec = prune_mod.PruneSpec(frequencies=freqs, keep_fraction=keep,
                                   frequency_source=tag)
    pruned = prune_mod.prune_model(model, spec)
    serialize(pruned, out)
    total, sparse, dense = pruned.param_count()
    click.echo(f"wrote {out}: |V|={pruned.vocab_size}, params {total} "
               f"(sparse {sparse}, dense {dense})")


@prune_group.command("sweep")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--freq-source", type=click.Choice(["train", "corpus+train"]),
              default="train", show_default=True)
@click.option("--train", "train_path", type=click.Path(exists=True), default=None)
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), default=None)
@click.option("--fractions", required=True, help="Comma-separated, e.g. 1.0,0.5,0.1")
@click.option("--dev", required=True, type=click.Path(exists=True))
@click.option("--csv", "csv_path", required=True, type=click.Path())
@click.option("--json", "as_json", is_flag=True)
def prune_sweep_cmd(model_path, freq_source, train_path, corpus_path, fractions,
                    dev, csv_path, as_json):
    """Accuracy-vs-size curve over keep fractions (CSV + figure)."""
    model = deserialize(model_path)
    freqs, tag = _frequencies_for(model, freq_source, train_path, corpus_path)
    fracs = [float(x) for x in fractions.split(",")]
    dev_texts, dev_labels = _labeled_texts(dev)
    rows = prune_mod.prune_sweep(model, freqs, fracs, dev_texts, dev_labels,
                                 frequency_source=tag)
    _write_csv(csv_path, rows, ["fraction", "params", "dev_accuracy"])
    plot_prune_sweep(rows, _fig_path(csv_path))
    if as_json:
        click.echo(json.dumps(rows))
    else:
        click.echo(f"wrote {csv_path} and {_fig_path(csv_path)}")


def _labeled_texts(path):
    texts, labels = [], []
    for lineno, obj in data_mod.read_jsonl(path):
        texts.append(obj["text"])
        labels.append(obj["label"])
    return texts, labels


@main.command("cutoff-eval")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--cutoffs", required=True, help="Comma-separated, e.g. 1,2,3,4")
@click.option("--dev", required=True, type=click.Path(exists=True))
@click.option("--csv", "csv_path", required=True, type=click.Path())
@click.option("--json", "as_json", is_flag=True)
def cutoff_eval_cmd(model_path, cutoffs, dev, csv_path, as_json):
    """Accuracy with longer n-grams disabled at inference time."""
    model = deserialize(model_path)
    dev_texts, dev_labels = _labeled_texts(dev)
    rows = prune_mod.cutoff_eval(model, dev_texts, dev_labels,
                                 [int(x) for x in cutoffs.split(",")])
    _write_csv(csv_path, rows, ["n_cutoff", "effective_vocab", "accuracy"])
    plot_cutoff_eval(rows, _fig_path(csv_path))
    if as_json:
        click.echo(json.dumps(rows))
    else:
        click.echo(f"wrote {csv_path} and {_fig_path(csv_path)}")


# -- analysis -----------------------------------------------------------
@main.group("analyze")
def analyze_group():
    """Model behavior reports."""


@analyze_group.command("coverage")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--dev", required=True, type=click.Path(exists=True))
@click.option("--csv", "csv_path", required=True, type=click.Path())
@click.option("--json", "as_json", is_flag=True)
def analyze_coverage(model_path, dev, csv_path, as_json):
    """Cross-entropy loss bucketed by n-gram coverage (CSV + figure)."""
    model = deserialize(model_path)
    dev_ex = data_mod.load_examples(dev, model.vocab, require="label")
    report = analysis_mod.coverage_vs_loss(model, dev_ex)
    rows = [{"bucket_lo": b.lo, "bucket_hi": b.hi, "count": b.count,
             "median_loss": f"{b.median_loss:.6f}",
             "q1_loss": f"{b.q1_loss:.6f}", "q3_loss": f"{b.q3_loss:.6f}"}
            for b in report.buckets]
    _write_csv(csv_path, rows, ["bucket_lo", "bucket_hi", "count", "median_loss",
                                "q1_loss", "q3_loss"])
    plot_coverage(report, _fig_path(csv_path))
    if as_json:
        click.echo(json.dumps({"buckets": rows,
                               "zero_coverage_count": report.zero_coverage_count}))
    else:
        click.echo(f"wrote {csv_path} and {_fig_path(csv_path)} "
                   f"({report.zero_coverage_count} zero-coverage examples)")


@main.command("bench")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--batch", "batch_size", default=32, show_default=True)
@click.option("--warmup", default=5, show_default=True)
@click.option("--iters", default=50, show_default=True)
@click.option("--precision", type=click.Choice(["fp32", "fp16"]), default="fp32",
              show_default=True)
@click.option("--include-featurize", is_flag=True)
@click.option("--json", "json_path", type=click.Path(), default=None)
def bench_cmd(model_path, input_path, batch_size, warmup, iters, precision,
              include_featurize, json_path):
    """Steady-state inference throughput (samples/second)."""
    model = deserialize(model_path)
    texts = data_mod.load_texts(input_path)
    dataset = data_mod.load_examples(input_path, model.vocab)
    report = analysis_mod.bench_inference(model, dataset, batch_size, warmup,
                                          iters, include_featurize, precision,
                                          raw_texts=texts)
    payload = report.to_dict()
    if json_path:
        with open(json_path, "w") as fh:
            json.dump(payload, fh, indent=2)
    click.echo(f"{report.samples_per_second:.1f} samples/sec "
               f"(batch {batch_size}, {precision}, "
               f"featurize {'included' if include_featurize else 'excluded'})")


@main.command("sweep")
@click.option("--grid", "grid_path", required=True, type=click.Path(exists=True),
              help="TOML: configs = [[vocab_size, d_e], ...] plus [data]/[recipe].")
@click.option("--csv", "csv_path", required=True, type=click.Path())
@click.option("--json", "as_json", is_flag=True)
def sweep_cmd(grid_path, csv_path, as_json):
    """Train one student per (|V|, d_e) config and tabulate accuracy."""
    with open(grid_path, "rb") as fh:
        grid = tomllib.load(fh)
    paths = grid["data"]
    recipe_raw = grid.get("recipe", {})
    train_texts, train_labels = _labeled_texts(paths["train"])
    dev_texts, dev_labels = _labeled_texts(paths["dev"])
    recipe = analysis_mod.SweepRecipe(
        n_range=tuple(recipe_raw.get("n_range", [1, 2])),
        hidden=tuple(recipe_raw.get("hidden", [64])),
        pooling=recipe_raw.get("pooling", "mean"),
        n_classes=recipe_raw.get("n_classes", max(train_labels) + 1),
        seed=recipe_raw.get("seed", 0),
        train_config=TrainConfig(mode=FT,
                                 lr=recipe_raw.get("lr", 1e-3),
                                 batch_size=recipe_raw.get("batch_size", 64),
                                 epochs=recipe_raw.get("epochs", 5),
                                 seed=recipe_raw.get("seed", 0)),
    )
    configs = [tuple(c) for c in grid["configs"]]
    rows = analysis_mod.budget_sweep(configs, train_texts, train_labels,
                                     dev_texts, dev_labels, recipe)
    _write_csv(csv_path, rows, ["vocab_size", "d_e", "params", "accuracy", "error"])
    plot_budget_sweep(rows, _fig_path(csv_path))
    click.echo(json.dumps(rows) if as_json
               else f"wrote {csv_path} and {_fig_path(csv_path)}")


# -- pipeline and validation -------------------------------------------
@main.command("pipeline")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--overwrite", is_flag=True)
def pipeline_cmd(config_path, overwrite):
    """Run the enabled stages (vocab -> KD -> FT) from a TOML config."""
    cfg = PipelineConfig.from_toml(config_path)
    artifacts = run_pipeline(cfg, overwrite=overwrite)
    for name, path in artifacts.items():
        click.echo(f"{name}: {path}")


@main.command("validate")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--kind", type=click.Choice(list(data_mod.KINDS)), required=True)
@click.option("--json", "as_json", is_flag=True)
def validate_cmd(input_path, kind, as_json):
    """Schema-check a JSONL dataset; nonzero exit on violations."""
    report = data_mod.validate_data(input_path, kind)
    if as_json:
        click.echo(json.dumps(dataclasses.asdict(report)))
    else:
        click.echo(f"{report.records} records, {report.total_violations} violations")
        for lineno, msg in report.violations:
            click.echo(f"  line {lineno}: {msg}")
    if not report.ok:
        sys.exit(1)


def cli_main():
    try:
        main(standalone_mode=True)
    except DandistillError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    cli_main()
