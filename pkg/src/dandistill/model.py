"""Deep Averaging Network student model.

Embedding lookup over n-gram ids, pooling (mean / max / sum / attentive),
then a ReLU MLP head and softmax. Sentence pairs pool each side with the
shared embedding table and feed the concatenate-compare vector
[h1, h2, h1*h2, |h1-h2|] to the same head.

Pooling reductions run over ids sorted ascending, so forward output is
exactly permutation invariant for every mode.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, IntegrityError, StructuralError, VersionError
from .featurize import FeaturizedExample, PairExample
from .vocab import NgramVocab, vocab_from_bytes, vocab_to_bytes

MAGIC = b"DDMD"
FORMAT_VERSION = 1

POOLING_MODES = ("mean", "max", "sum", "attentive")


def softmax(z, axis=-1):
    """Overflow-safe softmax (max subtraction)."""
    z = np.asarray(z)
    m = z.max(axis=axis, keepdims=True)
    e = np.exp(z - m)
    return e / e.sum(axis=axis, keepdims=True)


@dataclass
class AttentiveHead:
    wg: np.ndarray  # (d_e, d_a)
    wh: np.ndarray  # (d_e, d_a)
    v: np.ndarray  # (d_a,)

    @property
    def d_a(self):
        return self.v.shape[0]


@dataclass
class ForwardTrace:
    pooled: np.ndarray  # head input: h, or f(h1, h2) in pair mode
    hidden_pre: list  # pre-activation per hidden layer
    hidden_post: list  # post-ReLU per hidden layer
    logits: np.ndarray
    probs: np.ndarray
    attention: Optional[object] = None  # weights in input order; (left, right) for pairs


class DanModel:
    """A loaded model is immutable during inference; training mutates weights
    under a single-writer contract (see optim)."""

    def __init__(self, vocab: NgramVocab, embedding, layers, pooling="mean",
                 pair_mode=False, attentive: Optional[AttentiveHead] = None):
        if pooling not in POOLING_MODES:
            raise ConfigError(f"unknown pooling mode {pooling!r}")
        if embedding.ndim != 2 or embedding.shape[1] < 1:
            raise ConfigError("embedding must be a |V| x d_e matrix with d_e >= 1")
        if embedding.shape[0] != len(vocab):
            raise StructuralError(
                f"embedding rows {embedding.shape[0]} != vocab size {len(vocab)}")
        if pooling == "attentive" and attentive is None:
            raise ConfigError("attentive pooling requires an AttentiveHead")
        d_in = 4 * embedding.shape[1] if pair_mode else embedding.shape[1]
        expect = d_in
        for i, (w, b) in enumerate(layers):
            if w.shape[0] != expect or w.shape[1] != b.shape[0]:
                raise StructuralError(f"layer {i} shape mismatch: {w.shape} after {expect}")
            expect = w.shape[1]
        if expect < 2:
            raise ConfigError("n_classes must be >= 2")
        self.vocab = vocab
        self.embedding = embedding
        self.layers = layers
        self.pooling = pooling
        self.pair_mode = pair_mode
        self.attentive = attentive

    # -- basic dims -----------------------------------------------------
    @property
    def d_e(self):
        return self.embedding.shape[1]

    @property
    def vocab_size(self):
        return self.embedding.shape[0]

    @property
    def n_classes(self):
        return self.layers[-1][1].shape[0]

    @property
    def hidden_widths(self):
        return [w.shape[1] for w, _ in self.layers[:-1]]

    # -- pooling --------------------------------------------------------
    def pool(self, ids):
        vec, _ = self.pool_with_aux(ids)
        return vec

    def pool_with_aux(self, ids):
        """Pooled vector plus everything backward needs. Empty ids -> zeros."""
        d_e = self.d_e
        dtype = self.embedding.dtype
        if len(ids) == 0:
            return np.zeros(d_e, dtype=dtype), {"idx": None}
        perm = np.argsort(np.asarray(ids, dtype=np.int64), kind="stable")
        idx = np.asarray(ids, dtype=np.int64)[perm]
        if idx[-1] >= self.vocab_size:
            raise StructuralError(
                f"ngram id {idx[-1]} out of range for vocab size {self.vocab_size}")
        rows = self.embedding[idx]
        aux = {"idx": idx, "rows": rows, "perm": perm}
        if self.pooling == "mean":
            return rows.mean(axis=0), aux
        if self.pooling == "sum":
            return rows.sum(axis=0), aux
        if self.pooling == "max":
            aux["argmax"] = rows.argmax(axis=0)
            return rows.max(axis=0), aux
        # attentive: query is the mean-pooled vector, keys are embedding rows
        att = self.attentive
        h = rows.mean(axis=0)
        pre = rows @ att.wg + h @ att.wh
        t = np.tanh(pre)
        a = softmax(t @ att.v)
        aux.update(h=h, t=t, a=a)
        return a @ rows, aux

    # -- forward --------------------------------------------------------
    def head_input(self, ex):
        """Pooled head input vector and pooling aux for one example."""
        if self.pair_mode:
            if not isinstance(ex, PairExample):
                raise StructuralError("pair-mode model needs PairExample inputs")
            h1, aux1 = self.pool_with_aux(ex.left.ids)
            h2, aux2 = self.pool_with_aux(ex.right.ids)
            f = np.concatenate([h1, h2, h1 * h2, np.abs(h1 - h2)])
            return f, {"pair": (aux1, aux2), "h1": h1, "h2": h2}
        if isinstance(ex, PairExample):
            raise StructuralError("single-sentence model got a PairExample")
        vec, aux = self.pool_with_aux(ex.ids)
        return vec, {"single": aux}

    def head_forward(self, x):
        """Batched MLP head: x is (d_in,) or (B, d_in)."""
        pre, post = [], []
        h = x
        for i, (w, b) in enumerate(self.layers):
            z = h @ w + b
            if i < len(self.layers) - 1:
                pre.append(z)
                h = np.maximum(z, 0.0)
                post.append(h)
            else:
                logits = z
        return pre, post, logits

    def forward(self, ex) -> ForwardTrace:
        x, aux = self.head_input(ex)
        pre, post, logits = self.head_forward(x)
        probs = softmax(logits)
        attention = None
        if self.pooling == "attentive":
            def in_order(a):
                if a["idx"] is None:
                    return np.zeros(0, dtype=self.embedding.dtype)
                out = np.empty_like(a["a"])
                out[a["perm"]] = a["a"]
                return out
            if self.pair_mode:
                attention = (in_order(aux["pair"][0]), in_order(aux["pair"][1]))
            else:
                attention = in_order(aux["single"])
        return ForwardTrace(pooled=x, hidden_pre=pre, hidden_post=post,
                            logits=logits, probs=probs, attention=attention)

    def forward_batch(self, examples):
        """Probability matrix (B, n_classes) for a list of examples."""
        xs = np.stack([self.head_input(ex)[0] for ex in examples])
        _, _, logits = self.head_forward(xs)
        return softmax(logits, axis=-1)

    def predict(self, examples):
        return self.forward_batch(examples).argmax(axis=-1)

    # -- bookkeeping ----------------------------------------------------
    def param_count(self):
        """(total, sparse, dense) parameter counts."""
        return param_count(self.vocab_size, self.d_e, self.hidden_widths,
                           self.n_classes, pair_mode=self.pair_mode,
                           d_a=self.attentive.d_a if self.attentive else None)

    def copy(self):
        att = None
        if self.attentive is not None:
            att = AttentiveHead(self.attentive.wg.copy(), self.attentive.wh.copy(),
                                self.attentive.v.copy())
        return DanModel(self.vocab, self.embedding.copy(),
                        [(w.copy(), b.copy()) for w, b in self.layers],
                        self.pooling, self.pair_mode, att)

    def astype(self, dtype):
        """Cast weights (e.g. float32 for inference); returns a new model."""
        att = None
        if self.attentive is not None:
            att = AttentiveHead(self.attentive.wg.astype(dtype),
                                self.attentive.wh.astype(dtype),
                                self.attentive.v.astype(dtype))
        return DanModel(self.vocab, self.embedding.astype(dtype),
                        [(w.astype(dtype), b.astype(dtype)) for w, b in self.layers],
                        self.pooling, self.pair_mode, att)


def param_count(vocab_size, d_e, hidden, n_classes, pair_mode=False, d_a=None):
    """(total, sparse, dense) without allocating anything.

    sparse = |V| * d_e; dense = MLP head (+ attentive weights if present).
    """
    if d_e < 1:
        raise ConfigError("d_e must be >= 1")
    sparse = vocab_size * d_e
    d_in = 4 * d_e if pair_mode else d_e
    dense = 0
    prev = d_in
    for w in list(hidden) + [n_classes]:
        dense += prev * w + w
        prev = w
    if d_a is not None:
        dense += 2 * d_e * d_a + d_a
    return sparse + dense, sparse, dense


def init_model(vocab, d_e, hidden=(1000,), n_classes=2, pooling="mean",
               pair_mode=False, d_a=None, seed=0, dtype=np.float64):
    """Random initialization: embedding U(+-0.1/sqrt(d_e)), dense fan-in uniform."""
    if d_e < 1:
        raise ConfigError("d_e must be >= 1")
    if n_classes < 2:
        raise ConfigError("n_classes must be >= 2")
    rng = np.random.default_rng(seed)
    scale = 0.1 / np.sqrt(d_e)
    emb = rng.uniform(-scale, scale, size=(len(vocab), d_e)).astype(dtype)
    layers = []
    prev = 4 * d_e if pair_mode else d_e
    for width in list(hidden) + [n_classes]:
        lim = 1.0 / np.sqrt(prev)
        w = rng.uniform(-lim, lim, size=(prev, width)).astype(dtype)
        b = np.zeros(width, dtype=dtype)
        layers.append((w, b))
        prev = width
    attentive = None
    if pooling == "attentive":
        if d_a is None:
            d_a = d_e
        lim = 1.0 / np.sqrt(d_e)
        attentive = AttentiveHead(
            wg=rng.uniform(-lim, lim, size=(d_e, d_a)).astype(dtype),
            wh=rng.uniform(-lim, lim, size=(d_e, d_a)).astype(dtype),
            v=rng.uniform(-lim, lim, size=d_a).astype(dtype),
        )
    return DanModel(vocab, emb, layers, pooling, pair_mode, attentive)


# -- persistence -------------------------------------------------------
def _weight_arrays(model):
    arrays = [("embedding", model.embedding)]
    for i, (w, b) in enumerate(model.layers):
        arrays.append((f"w{i}", w))
        arrays.append((f"b{i}", b))
    if model.attentive is not None:
        arrays += [("wg", model.attentive.wg), ("wh", model.attentive.wh),
                   ("v", model.attentive.v)]
    return arrays


def serialize(model: DanModel, path):
    """Self-contained model file: config, embedded vocab, raw weight blobs."""
    config = {
        "d_e": model.d_e,
        "hidden": model.hidden_widths,
        "n_classes": model.n_classes,
        "pooling": model.pooling,
        "pair_mode": model.pair_mode,
        "d_a": model.attentive.d_a if model.attentive else None,
        "dtype": str(model.embedding.dtype),
    }
    cfg = json.dumps(config).encode("utf-8")
    vocab_blob = vocab_to_bytes(model.vocab)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<H", FORMAT_VERSION))
        fh.write(struct.pack("<I", len(cfg)))
        fh.write(cfg)
        fh.write(struct.pack("<Q", len(vocab_blob)))
        fh.write(vocab_blob)
        for _, arr in _weight_arrays(model):
            fh.write(np.ascontiguousarray(arr).tobytes())


def deserialize(path) -> DanModel:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 4 or data[:4] != MAGIC:
        raise IntegrityError("not a model file (bad magic)", offset=0)
    off = 4
    (version,) = struct.unpack_from("<H", data, off)
    if version != FORMAT_VERSION:
        raise VersionError(f"unsupported model format version {version}")
    off += 2
    if len(data) < off + 4:
        raise IntegrityError("truncated config length", offset=off)
    (cfg_len,) = struct.unpack_from("<I", data, off)
    off += 4
    if len(data) < off + cfg_len:
        raise IntegrityError("truncated config block", offset=off)
    config = json.loads(data[off : off + cfg_len].decode("utf-8"))
    off += cfg_len
    if len(data) < off + 8:
        raise IntegrityError("truncated vocab length", offset=off)
    (vlen,) = struct.unpack_from("<Q", data, off)
    off += 8
    if len(data) < off + vlen:
        raise IntegrityError("truncated vocab block", offset=off)
    vocab = vocab_from_bytes(data[off : off + vlen])
    off += vlen

    dtype = np.dtype(config["dtype"])
    d_e = config["d_e"]
    d_in = 4 * d_e if config["pair_mode"] else d_e
    shapes = [(len(vocab), d_e)]
    prev = d_in
    for width in config["hidden"] + [config["n_classes"]]:
        shapes += [(prev, width), (width,)]
        prev = width
    if config["d_a"] is not None:
        d_a = config["d_a"]
        shapes += [(d_e, d_a), (d_e, d_a), (d_a,)]
    arrays = []
    for shape in shapes:
        nbytes = int(np.prod(shape)) * dtype.itemsize
        if len(data) < off + nbytes:
            raise IntegrityError("truncated weight blob", offset=off)
        arrays.append(np.frombuffer(data, dtype=dtype, count=int(np.prod(shape)),
                                    offset=off).reshape(shape).copy())
        off += nbytes
    if off != len(data):
        raise IntegrityError("trailing bytes after weights", offset=off)

    emb = arrays[0]
    n_layers = len(config["hidden"]) + 1
    layers = [(arrays[1 + 2 * i], arrays[2 + 2 * i]) for i in range(n_layers)]
    attentive = None
    if config["d_a"] is not None:
        wg, wh, v = arrays[1 + 2 * n_layers :]
        attentive = AttentiveHead(wg, wh, v)
    return DanModel(vocab, emb, layers, config["pooling"], config["pair_mode"],
                    attentive)
