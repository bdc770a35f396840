"""Losses, exact backward pass, and the hybrid sparse/dense Adam optimizer.

The embedding table is optimized lazily: gradients, moments, and weight
updates touch only rows whose ids appear in the current batch, and each
row carries its own step counter for bias correction. Head parameters use
regular dense Adam on the global step counter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataValidationError, StructuralError
from .model import DanModel, softmax

KD = "kd"
FT = "ft"


# -- losses ------------------------------------------------------------
def kd_loss(teacher, student):
    """KL(teacher || student). Terms with teacher_j = 0 contribute 0."""
    t = np.asarray(teacher, dtype=np.float64)
    s = np.asarray(student, dtype=np.float64)
    if t.shape != s.shape:
        raise StructuralError(f"distribution length mismatch: {t.shape} vs {s.shape}")
    mask = t > 0
    return float(np.sum(t[mask] * np.log(t[mask] / s[mask])))


def ft_loss(label, student):
    """Cross-entropy -log(student[label]); equals kd_loss with a one-hot teacher."""
    s = np.asarray(student, dtype=np.float64)
    if not 0 <= label < s.shape[0]:
        raise DataValidationError(f"label {label} out of range for {s.shape[0]} classes")
    return float(-np.log(s[label]))


# -- gradients ---------------------------------------------------------
@dataclass
class Gradients:
    """Mean-over-batch gradients: sparse embedding rows + dense tensors."""

    emb_rows: dict[int, np.ndarray] = field(default_factory=dict)
    dense: dict[str, np.ndarray] = field(default_factory=dict)


def dense_params(model: DanModel):
    """Name -> array view of every dense (head) parameter."""
    params = {}
    for i, (w, b) in enumerate(model.layers):
        params[f"w{i}"] = w
        params[f"b{i}"] = b
    if model.attentive is not None:
        params["wg"] = model.attentive.wg
        params["wh"] = model.attentive.wh
        params["v"] = model.attentive.v
    return params


def _scatter_rows(idx, row_grads, emb_rows):
    for j, rid in enumerate(idx):
        rid = int(rid)
        acc = emb_rows.get(rid)
        if acc is None:
            emb_rows[rid] = row_grads[j].copy()
        else:
            acc += row_grads[j]


def _pool_backward(model, aux, g, grads: Gradients):
    """Backprop g (d_e) through one pooling aux into embedding/attentive grads."""
    idx = aux["idx"]
    if idx is None:
        return
    k = len(idx)
    mode = model.pooling
    if mode in ("mean", "sum"):
        uniq, counts = np.unique(idx, return_counts=True)
        scale = counts / k if mode == "mean" else counts.astype(g.dtype)
        for u, s in zip(uniq, scale):
            u = int(u)
            acc = grads.emb_rows.get(u)
            if acc is None:
                grads.emb_rows[u] = s * g
            else:
                acc += s * g
        return
    if mode == "max":
        rows_g = np.zeros((k, g.shape[0]), dtype=g.dtype)
        np.add.at(rows_g, (aux["argmax"], np.arange(g.shape[0])), g)
        _scatter_rows(idx, rows_g, grads.emb_rows)
        return
    # attentive
    att = model.attentive
    rows, t, a, h = aux["rows"], aux["t"], aux["a"], aux["h"]
    da = rows @ g  # pooled = a @ rows
    rows_g = np.outer(a, g)
    du = a * (da - a @ da)  # softmax backward
    dpre = np.outer(du, att.v) * (1.0 - t**2)
    dv = du @ t
    dwg = rows.T @ dpre
    dpre_sum = dpre.sum(axis=0)
    dwh = np.outer(h, dpre_sum)
    rows_g += dpre @ att.wg.T
    dh = dpre_sum @ att.wh.T  # query = mean of rows
    rows_g += dh / k
    for name, val in (("wg", dwg), ("wh", dwh), ("v", dv)):
        grads.dense[name] += val
    _scatter_rows(idx, rows_g, grads.emb_rows)


def _targets(examples, n_classes, mode):
    target = np.zeros((len(examples), n_classes), dtype=np.float64)
    for i, ex in enumerate(examples):
        if mode == KD:
            if ex.teacher_probs is None:
                raise DataValidationError("KD example missing teacher_probs", line=i)
            probs = np.asarray(ex.teacher_probs, dtype=np.float64)
            if probs.shape[0] != n_classes:
                raise StructuralError(
                    f"teacher_probs length {probs.shape[0]} != n_classes {n_classes}")
            target[i] = probs
        else:
            if ex.label is None:
                raise DataValidationError("FT example missing label", line=i)
            if not 0 <= ex.label < n_classes:
                raise DataValidationError(f"label {ex.label} out of range", line=i)
            target[i, ex.label] = 1.0
    return target


def backward(examples, model: DanModel, mode, temperature=1.0):
    """Mean-over-batch loss and exact gradients for all model variants.

    Embedding gradients are nonzero only on rows whose ids appear in the
    batch; gradient structure mirrors the TrainState moment layout.
    """
    loss, grads, _ = _forward_backward(examples, model, mode, temperature)
    return loss, grads


def _forward_backward(examples, model: DanModel, mode, temperature=1.0):
    n = len(examples)
    auxes = []
    xs = np.empty((n, 4 * model.d_e if model.pair_mode else model.d_e),
                  dtype=np.float64)
    for i, ex in enumerate(examples):
        x, aux = model.head_input(ex)
        xs[i] = x
        auxes.append(aux)
    pre, post, logits = model.head_forward(xs)
    target = _targets(examples, model.n_classes, mode)
    if mode == KD and temperature != 1.0:
        target = target ** (1.0 / temperature)
        target /= target.sum(axis=1, keepdims=True)
        probs = softmax(logits / temperature, axis=-1)
        dz_scale = 1.0 / temperature
    else:
        probs = softmax(logits, axis=-1)
        dz_scale = 1.0

    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(target > 0, target * np.log(target / probs), 0.0)
    loss = float(terms.sum() / n)

    grads = Gradients()
    for name, p in dense_params(model).items():
        grads.dense[name] = np.zeros_like(p)

    dz = (probs - target) * (dz_scale / n)
    # head backward; layer i input is xs for i == 0 else post[i - 1]
    for i in range(len(model.layers) - 1, -1, -1):
        inp = xs if i == 0 else post[i - 1]
        grads.dense[f"w{i}"] += inp.T @ dz
        grads.dense[f"b{i}"] += dz.sum(axis=0)
        if i > 0:
            dh = dz @ model.layers[i][0].T
            dz = dh * (pre[i - 1] > 0)
    dx = dz @ model.layers[0][0].T

    d_e = model.d_e
    for i, aux in enumerate(auxes):
        if model.pair_mode:
            aux1, aux2 = aux["pair"]
            h1, h2 = aux["h1"], aux["h2"]
            g1, g2, g3, g4 = (dx[i, :d_e], dx[i, d_e : 2 * d_e],
                              dx[i, 2 * d_e : 3 * d_e], dx[i, 3 * d_e :])
            sign = np.sign(h1 - h2)
            _pool_backward(model, aux1, g1 + g3 * h2 + g4 * sign, grads)
            _pool_backward(model, aux2, g2 + g3 * h1 - g4 * sign, grads)
        else:
            _pool_backward(model, aux["single"], dx[i], grads)
    return loss, grads, probs


# -- hybrid Adam -------------------------------------------------------
@dataclass
class SparseMoment:
    m: np.ndarray
    v: np.ndarray
    step: int = 0


@dataclass
class TrainState:
    lr: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    global_step: int = 0
    dense_m: dict = field(default_factory=dict)
    dense_v: dict = field(default_factory=dict)
    sparse: dict = field(default_factory=dict)  # row id -> SparseMoment

    @classmethod
    def for_model(cls, model, lr=5e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        state = cls(lr=lr, beta1=beta1, beta2=beta2, eps=eps)
        for name, p in dense_params(model).items():
            state.dense_m[name] = np.zeros_like(p)
            state.dense_v[name] = np.zeros_like(p)
        return state


def hybrid_adam_step(state: TrainState, model: DanModel, grads: Gradients):
    """One optimizer step, in place.

    Dense parameters: regular Adam with bias correction on the global step.
    Embedding rows present in the gradient: Adam with the row's own step
    counter; untouched rows and moments are left bit-identical.
    """
    state.global_step += 1
    b1, b2, lr, eps = state.beta1, state.beta2, state.lr, state.eps
    t = state.global_step
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    params = dense_params(model)
    for name, g in grads.dense.items():
        m = state.dense_m[name]
        v = state.dense_v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        params[name] -= lr * (m / c1) / (np.sqrt(v / c2) + eps)

    for rid in sorted(grads.emb_rows):
        g = grads.emb_rows[rid]
        mom = state.sparse.get(rid)
        if mom is None:
            mom = SparseMoment(np.zeros_like(g), np.zeros_like(g))
            state.sparse[rid] = mom
        mom.step += 1
        mom.m *= b1
        mom.m += (1.0 - b1) * g
        mom.v *= b2
        mom.v += (1.0 - b2) * g * g
        rc1 = 1.0 - b1**mom.step
        rc2 = 1.0 - b2**mom.step
        model.embedding[rid] -= lr * (mom.m / rc1) / (np.sqrt(mom.v / rc2) + eps)


# -- evaluation and the training loop ----------------------------------
def evaluate(model: DanModel, examples, batch_size=512):
    """(mean cross-entropy loss vs labels, accuracy) on a labeled set."""
    total_loss = 0.0
    correct = 0
    for start in range(0, len(examples), batch_size):
        chunk = examples[start : start + batch_size]
        probs = model.forward_batch(chunk)
        for ex, p in zip(chunk, probs):
            total_loss += ft_loss(ex.label, p)
            if int(np.argmax(p)) == ex.label:
                correct += 1
    n = len(examples)
    return total_loss / n, correct / n


@dataclass
class TrainConfig:
    mode: str = FT  # "kd" or "ft"
    lr: float = 5e-4
    batch_size: int = 256
    epochs: int = 1
    max_steps: int | None = None
    eval_interval: int | None = None  # steps; default: once per epoch
    seed: int = 0
    temperature: float = 1.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class MetricsRow:
    step: int
    split: str
    loss: float
    accuracy: float


@dataclass
class TrainResult:
    model: DanModel  # best dev checkpoint (final weights if no dev)
    final_model: DanModel
    metrics: list[MetricsRow]
    best_dev_accuracy: float | None = None


def _batch_accuracy(examples, probs):
    hits = 0
    for ex, p in zip(examples, probs):
        ref = ex.label if ex.label is not None else int(np.argmax(ex.teacher_probs))
        if int(np.argmax(p)) == ref:
            hits += 1
    return hits / len(examples)


def train(model: DanModel, examples, config: TrainConfig, dev=None) -> TrainResult:
    """Run one training stage (KD or FT) and keep the best-dev checkpoint."""
    _targets(examples[: min(8, len(examples))], model.n_classes, config.mode)
    state = TrainState.for_model(model, lr=config.lr, beta1=config.beta1,
                                 beta2=config.beta2, eps=config.eps)
    rng = np.random.default_rng(config.seed)
    metrics: list[MetricsRow] = []
    best = None
    best_acc = None

    n = len(examples)
    steps_per_epoch = max(1, math.ceil(n / config.batch_size))
    eval_interval = config.eval_interval or steps_per_epoch
    step = 0
    recent_losses = []
    recent_accs = []

    def run_eval():
        nonlocal best, best_acc
        if recent_losses:
            metrics.append(MetricsRow(step, "train",
                                      float(np.mean(recent_losses)),
                                      float(np.mean(recent_accs))))
            recent_losses.clear()
            recent_accs.clear()
        if dev is not None:
            dev_loss, dev_acc = evaluate(model, dev)
            metrics.append(MetricsRow(step, "dev", dev_loss, dev_acc))
            if best_acc is None or dev_acc > best_acc:
                best_acc = dev_acc
                best = model.copy()

    done = False
    for _ in range(config.epochs):
        if done:
            break
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = [examples[i] for i in order[start : start + config.batch_size]]
            loss, grads, probs = _forward_backward(batch, model, config.mode,
                                                   config.temperature)
            hybrid_adam_step(state, model, grads)
            step += 1
            recent_losses.append(loss)
            recent_accs.append(_batch_accuracy(batch, probs))
            if step % eval_interval == 0:
                run_eval()
            if config.max_steps is not None and step >= config.max_steps:
                done = True
                break
    if step == 0 or step % eval_interval != 0:
        run_eval()
    final = model
    return TrainResult(model=best if best is not None else final,
                       final_model=final, metrics=metrics,
                       best_dev_accuracy=best_acc)
