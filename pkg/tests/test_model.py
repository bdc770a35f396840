import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from dandistill import (FeaturizedExample, PairExample, deserialize, featurize,
                        init_model, param_count, serialize)
from dandistill.errors import ConfigError, IntegrityError, StructuralError
from dandistill.model import AttentiveHead, DanModel
from dandistill.vocab import NgramVocab, VocabEntry

from conftest import tiny_model


def ex(ids):
    return FeaturizedExample(ids=list(ids), total_ngrams=len(ids),
                             matched_ngrams=len(ids))


def scalar_forward(model, ids):
    """Independent oracle: per-element loops, mean pooling only."""
    d_e = model.d_e
    h = [0.0] * d_e
    for i in ids:
        for d in range(d_e):
            h[d] += float(model.embedding[i][d])
    h = [x / len(ids) for x in h]
    x = h
    for li, (w, b) in enumerate(model.layers):
        z = []
        for j in range(w.shape[1]):
            acc = float(b[j])
            for d in range(w.shape[0]):
                acc += x[d] * float(w[d][j])
            z.append(acc)
        if li < len(model.layers) - 1:
            x = [max(v, 0.0) for v in z]
    m = max(z)
    exps = [math.exp(v - m) for v in z]
    s = sum(exps)
    return z, [e / s for e in exps]


def test_pool_arithmetic():
    _, model = tiny_model(d_e=2, n_range=(1, 1), docs=["a b c"])
    model.embedding[:] = [[1.0, -2.0], [3.0, 0.0], [5.0, 5.0]]
    for mode, expected in (("mean", [2.0, -1.0]), ("max", [3.0, 0.0]),
                           ("sum", [4.0, -2.0])):
        model.pooling = mode
        assert_allclose(model.pool([0, 1]), expected)


def test_singleton_pooling_identical_across_modes():
    for mode in ("mean", "max", "sum", "attentive"):
        _, model = tiny_model(pooling=mode, d_a=3)
        vec = model.pool([2])
        assert_allclose(vec, model.embedding[2])
        if mode == "attentive":
            trace = model.forward(ex([2]))
            assert_allclose(trace.attention, [1.0])


def test_attentive_identical_rows_uniform_weights():
    _, model = tiny_model(pooling="attentive", d_a=3)
    model.embedding[1] = model.embedding[0]
    trace = model.forward(ex([0, 1]))
    assert_allclose(trace.attention, [0.5, 0.5])


def test_empty_ids_zero_vector():
    for mode in ("mean", "max", "sum", "attentive"):
        _, model = tiny_model(pooling=mode, d_a=3)
        assert_array_equal(model.pool([]), np.zeros(model.d_e))


def test_zero_weights_uniform_probs():
    _, model = tiny_model(n_classes=3)
    model.embedding[:] = 0.0
    for w, b in model.layers:
        w[:] = 0.0
        b[:] = 0.0
    trace = model.forward(ex([0, 1, 2]))
    assert_allclose(trace.probs, [1 / 3] * 3)


def test_forward_matches_scalar_oracle():
    _, model = tiny_model(d_e=2, hidden=(2,), seed=3)
    trace = model.forward(ex([0, 1]))
    logits, probs = scalar_forward(model, [0, 1])
    assert_allclose(trace.logits, logits, rtol=1e-12)
    assert_allclose(trace.probs, probs, rtol=1e-12)


def test_softmax_normalization():
    rng = np.random.default_rng(0)
    _, model = tiny_model(seed=5)
    for _ in range(20):
        ids = list(rng.integers(0, model.vocab_size, size=rng.integers(1, 8)))
        probs = model.forward(ex(ids)).probs
        assert abs(probs.sum() - 1.0) < 1e-6
        assert np.all(probs > 0) and np.all(probs < 1)


def test_permutation_invariance():
    rng = np.random.default_rng(1)
    for mode in ("mean", "max", "sum", "attentive"):
        _, model = tiny_model(pooling=mode, d_a=3, seed=2)
        ids = list(rng.integers(0, model.vocab_size, size=9))
        base = model.forward(ex(ids)).probs
        for _ in range(5):
            perm = list(rng.permutation(ids))
            assert_array_equal(model.forward(ex(perm)).probs, base)


def test_sum_is_k_times_mean():
    _, model = tiny_model(pooling="sum")
    ids = [0, 1, 1, 2, 4]
    total = model.pool(ids)
    model.pooling = "mean"
    assert_allclose(total, len(ids) * model.pool(ids), atol=1e-9)


def test_attentive_degenerates_to_mean():
    _, model = tiny_model(pooling="attentive", d_a=3)
    model.attentive.v[:] = 0.0
    ids = [0, 2, 3, 3]
    att = model.pool(ids)
    model.pooling = "mean"
    assert_allclose(att, model.pool(ids), atol=1e-12)


def test_pair_head_block_structure():
    _, model = tiny_model(pair_mode=True, d_e=3)
    a, b = ex([0, 1]), ex([2, 3, 4])
    d_e = model.d_e
    fab, _ = model.head_input(PairExample(left=a, right=b))
    fba, _ = model.head_input(PairExample(left=b, right=a))
    assert_array_equal(fab[:d_e], fba[d_e : 2 * d_e])
    assert_array_equal(fab[d_e : 2 * d_e], fba[:d_e])
    assert_array_equal(fab[2 * d_e :], fba[2 * d_e :])


def test_pair_identical_sides():
    _, model = tiny_model(pair_mode=True, d_e=3)
    a = ex([0, 1, 2])
    f, _ = model.head_input(PairExample(left=a, right=a))
    d_e = model.d_e
    h1 = f[:d_e]
    assert_array_equal(f[3 * d_e :], np.zeros(d_e))  # |h1-h2| block
    assert_allclose(f[2 * d_e : 3 * d_e], h1 * h1)


def test_deeper_head_variant():
    _, model = tiny_model(hidden=(8, 4), n_classes=2)
    trace = model.forward(ex([0, 1]))
    assert len(trace.hidden_pre) == 2
    assert trace.probs.shape == (2,)
    assert abs(trace.probs.sum() - 1.0) < 1e-6


def test_param_count_full_scale():
    total, sparse, dense = param_count(1_000_000, 1000, [1000], 2)
    assert round(sparse / 1e6) == 1000
    assert round(dense / 1e6) == 1
    assert round(total / 1e6) == 1001


def test_param_count_tiny():
    total, sparse, dense = param_count(1, 1, [1], 2)
    assert sparse == 1
    assert dense == 1 + 1 + 2 + 2
    assert total == 7


def test_param_count_matches_model():
    _, model = tiny_model(hidden=(8, 4), n_classes=3, d_e=5)
    total, sparse, dense = model.param_count()
    manual = sum(w.size + b.size for w, b in model.layers)
    assert sparse == model.vocab_size * 5
    assert dense == manual
    assert total == sparse + dense


def test_degenerate_dims_rejected():
    vocab = NgramVocab([VocabEntry("a", 0, 1)], (1, 1))
    with pytest.raises(ConfigError):
        init_model(vocab, 0)
    with pytest.raises(ConfigError):
        init_model(vocab, 4, n_classes=1)
    with pytest.raises(ConfigError):
        param_count(10, 0, [4], 2)


def test_mismatched_vocab_rejected():
    vocab, model = tiny_model()
    bad = FeaturizedExample(ids=[model.vocab_size + 3], total_ngrams=1,
                            matched_ngrams=1)
    with pytest.raises(StructuralError):
        model.forward(bad)


def test_pair_mode_kind_mismatch():
    _, single = tiny_model()
    _, paired = tiny_model(pair_mode=True)
    pair = PairExample(left=ex([0]), right=ex([1]))
    with pytest.raises(StructuralError):
        single.forward(pair)
    with pytest.raises(StructuralError):
        paired.forward(ex([0]))


def test_serialize_roundtrip(tmp_path):
    for kwargs in ({}, {"pooling": "attentive", "d_a": 3},
                   {"pair_mode": True, "hidden": (8, 4)}):
        _, model = tiny_model(**kwargs)
        path = tmp_path / "m.bin"
        serialize(model, path)
        loaded = deserialize(path)
        assert_array_equal(loaded.embedding, model.embedding)
        for (w1, b1), (w2, b2) in zip(loaded.layers, model.layers):
            assert_array_equal(w1, w2)
            assert_array_equal(b1, b2)
        assert loaded.pooling == model.pooling
        assert loaded.pair_mode == model.pair_mode
        assert loaded.vocab.entries == model.vocab.entries
        if model.attentive:
            assert_array_equal(loaded.attentive.wg, model.attentive.wg)
        ids = [0, 1, 2]
        ref = (model.forward(PairExample(left=ex(ids), right=ex([1])))
               if model.pair_mode else model.forward(ex(ids)))
        new = (loaded.forward(PairExample(left=ex(ids), right=ex([1])))
               if loaded.pair_mode else loaded.forward(ex(ids)))
        assert_array_equal(ref.probs, new.probs)


def test_serialize_truncation(tmp_path):
    _, model = tiny_model()
    path = tmp_path / "m.bin"
    serialize(model, path)
    blob = path.read_bytes()
    path.write_bytes(blob[:-10])
    with pytest.raises(IntegrityError):
        deserialize(path)


@pytest.mark.slow
def test_large_model_roundtrip(tmp_path):
    entries = [VocabEntry(f"g{i}", i, 2) for i in range(1_000_000)]
    vocab = NgramVocab(entries, (1, 1))
    model = init_model(vocab, 16, hidden=(8,), seed=0, dtype=np.float32)
    path = tmp_path / "big.bin"
    serialize(model, path)
    size_mb = path.stat().st_size / 2**20
    loaded = deserialize(path)
    assert_array_equal(loaded.embedding, model.embedding)
    assert size_mb > 16  # 1M x 16 float32 embedding dominates
