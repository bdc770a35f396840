"""Matplotlib figure rendering for report commands.

Every report CSV gets a companion PNG rendered next to it. All figures use
the Agg backend so they work headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def plot_prune_sweep(rows, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    params = [r["params"] / 1e3 for r in rows]
    accs = [100 * r["dev_accuracy"] for r in rows]
    ax.plot(params, accs, marker="o")
    ax.set_xlabel("parameters (thousands)")
    ax.set_ylabel("dev accuracy (%)")
    ax.set_title("Accuracy vs pruned model size")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_cutoff_eval(rows, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    cutoffs = [r["n_cutoff"] for r in rows]
    accs = [100 * r["accuracy"] for r in rows]
    ax.plot(cutoffs, accs, marker="s")
    ax.set_xlabel("max n-gram order")
    ax.set_ylabel("dev accuracy (%)")
    ax.set_xticks(cutoffs)
    ax.set_title("Accuracy vs n-gram order cutoff")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_coverage(report, path):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.5))
    centers = [(b.lo + b.hi) / 2 for b in report.buckets]
    med = [b.median_loss for b in report.buckets]
    q1 = [b.q1_loss for b in report.buckets]
    q3 = [b.q3_loss for b in report.buckets]
    ax1.plot(centers, med, marker="o", label="median")
    ax1.fill_between(centers, q1, q3, alpha=0.25, label="quartiles")
    ax1.set_xlabel("n-gram coverage")
    ax1.set_ylabel("cross-entropy loss")
    ax1.set_title("Loss vs coverage")
    ax1.legend()
    ax1.grid(alpha=0.3)
    edges = [i / 10 for i in range(10)]
    ax2.bar(edges, report.histogram, width=0.1, align="edge", edgecolor="white")
    ax2.set_xlabel("n-gram coverage")
    ax2.set_ylabel("examples")
    ax2.set_title("Coverage distribution")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_budget_sweep(rows, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    by_vocab = {}
    for r in rows:
        if r["accuracy"] is None:
            continue
        by_vocab.setdefault(r["vocab_size"], []).append(r)
    for vocab_size, group in sorted(by_vocab.items()):
        group = sorted(group, key=lambda r: r["params"])
        ax.plot([g["params"] / 1e3 for g in group],
                [100 * g["accuracy"] for g in group],
                marker="o", label=f"|V|={vocab_size}")
    ax.set_xlabel("parameters (thousands)")
    ax.set_ylabel("dev accuracy (%)")
    ax.set_title("Vocab size vs embedding dim trade-off")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_metrics(metrics, path):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.5))
    for split, ax_loss in (("train", ax1), ("dev", ax1)):
        rows = [m for m in metrics if m.split == split]
        if rows:
            ax_loss.plot([m.step for m in rows], [m.loss for m in rows],
                         label=split)
    ax1.set_xlabel("step")
    ax1.set_ylabel("loss")
    ax1.legend()
    ax1.grid(alpha=0.3)
    dev = [m for m in metrics if m.split == "dev"]
    if dev:
        ax2.plot([m.step for m in dev], [100 * m.accuracy for m in dev],
                 marker=".", color="tab:green")
    ax2.set_xlabel("step")
    ax2.set_ylabel("dev accuracy (%)")
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
