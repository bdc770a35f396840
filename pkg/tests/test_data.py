import json
import math

import pytest

from dandistill.data import (load_examples, load_texts, read_jsonl,
                             validate_data, write_jsonl, write_metrics_csv)
from dandistill.errors import DataValidationError
from dandistill.optim import MetricsRow
from dandistill.vocab import NgramVocab, VocabEntry


def small_vocab():
    entries = [VocabEntry("a", 0, 3), VocabEntry("b", 1, 2), VocabEntry("a b", 2, 1)]
    return NgramVocab(entries, (1, 2))


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def test_jsonl_roundtrip(tmp_path):
    path = tmp_path / "d.jsonl"
    objs = [{"text": "a b", "label": 0}, {"text": "b", "probs": [0.5, 0.5]}]
    write_jsonl(path, objs)
    assert [o for _, o in read_jsonl(path)] == objs


def test_read_jsonl_line_numbers(tmp_path):
    path = tmp_path / "d.jsonl"
    write_lines(path, ['{"text": "a"}', "", "not json"])
    with pytest.raises(DataValidationError) as err:
        list(read_jsonl(path))
    assert err.value.line == 3


def test_validate_labeled_ok(tmp_path):
    path = tmp_path / "d.jsonl"
    write_lines(path, ['{"text": "a", "label": 0}',
                       '{"text1": "a", "text2": "b", "label": 3}'])
    report = validate_data(path, "labeled")
    assert report.ok
    assert report.records == 2


def test_validate_reports_each_violation_kind(tmp_path):
    path = tmp_path / "d.jsonl"
    write_lines(path, [
        '{"text": "ok", "label": 1}',           # 1 fine
        '{"label": 2}',                          # 2 missing text
        '{"text": 5, "label": 0}',               # 3 non-string text
        '{"text": "x", "label": -1}',            # 4 negative label
        '{"text": "x", "label": true}',          # 5 bool label
        '{"text": "x"}',                         # 6 missing label
        'garbage',                               # 7 bad json
    ])
    report = validate_data(path, "labeled")
    assert not report.ok
    assert report.total_violations == 6
    assert [line for line, _ in report.violations] == [2, 3, 4, 5, 6, 7]


def test_validate_soft_probs(tmp_path):
    path = tmp_path / "d.jsonl"
    write_lines(path, [
        '{"text": "a", "probs": [0.25, 0.75]}',
        '{"text": "a", "probs": [0.6, 0.6]}',        # bad sum
        '{"text": "a", "probs": [1.2, -0.2]}',       # negative
        '{"text": "a", "probs": [1.0]}',             # too short
        '{"text": "a", "probs": [0.2, 0.3, 0.5]}',   # n_classes drift
        '{"text": "a"}',                             # missing
    ])
    report = validate_data(path, "soft")
    assert report.total_violations == 5
    assert [line for line, _ in report.violations] == [2, 3, 4, 5, 6]


def test_validate_soft_sum_tolerance(tmp_path):
    path = tmp_path / "d.jsonl"
    write_lines(path, [json.dumps({"text": "a", "probs": [0.5, 0.5 + 5e-7]}),
                       json.dumps({"text": "a", "probs": [0.5, 0.5 + 5e-6]})])
    report = validate_data(path, "soft")
    assert report.total_violations == 1
    assert report.violations[0][0] == 2


def test_validate_corpus_kind(tmp_path):
    path = tmp_path / "d.jsonl"
    write_lines(path, ['{"text": "a"}', '{"nope": 1}'])
    report = validate_data(path, "corpus")
    assert report.total_violations == 1


def test_validate_max_reported_caps_list_not_count(tmp_path):
    path = tmp_path / "d.jsonl"
    write_lines(path, ['{"bad": 1}'] * 25)
    report = validate_data(path, "corpus", max_reported=10)
    assert len(report.violations) == 10
    assert report.total_violations == 25


def test_validate_unknown_kind(tmp_path):
    path = tmp_path / "d.jsonl"
    write_lines(path, ['{"text": "a"}'])
    with pytest.raises(DataValidationError):
        validate_data(path, "mystery")


def independent_check(obj, kind, n_seen):
    """Separate oracle for record validity, written against the documented
    schema rather than the implementation."""
    pair = "text1" in obj or "text2" in obj
    texts = [obj.get("text1"), obj.get("text2")] if pair else [obj.get("text")]
    if any(not isinstance(t, str) for t in texts):
        return False, n_seen
    if kind == "labeled":
        lab = obj.get("label")
        ok = type(lab) is int and lab >= 0
        return ok, n_seen
    if kind == "soft":
        p = obj.get("probs")
        if type(p) is not list or len(p) < 2:
            return False, n_seen
        if any(type(v) not in (int, float) for v in p):
            return False, n_seen
        if any(v < 0 for v in p) or abs(sum(p) - 1.0) > 1e-6:
            return False, n_seen
        if n_seen is not None and len(p) != n_seen:
            return False, n_seen
        return True, len(p) if n_seen is None else n_seen
    return True, n_seen


def random_record(rng):
    choice = rng.random()
    obj = {}
    if choice < 0.1:
        pass  # no text at all
    elif choice < 0.2:
        obj["text1"], obj["text2"] = "a b", "b a"
    else:
        obj["text"] = "a b" if rng.random() < 0.9 else 7
    r = rng.random()
    if r < 0.3:
        obj["label"] = int(rng.integers(-1, 4))
    elif r < 0.7:
        k = int(rng.integers(1, 4))
        probs = [round(float(v), 4) for v in rng.random(k)]
        if rng.random() < 0.5:
            s = sum(probs)
            probs = [round(v / s, 6) for v in probs] if s else probs
            probs[-1] = round(1.0 - sum(probs[:-1]), 10)
        if rng.random() < 0.1 and probs:
            probs[0] = -probs[0]
        obj["probs"] = probs
    return obj


@pytest.mark.slow
def test_fuzzed_file_matches_oracle(tmp_path):
    import numpy as np
    rng = np.random.default_rng(42)
    records = [random_record(rng) for _ in range(10_000)]
    path = tmp_path / "fuzz.jsonl"
    write_jsonl(path, records)
    for kind in ("labeled", "soft", "corpus"):
        expected_bad = []
        n_seen = None
        for i, obj in enumerate(records, start=1):
            ok, n_seen = independent_check(obj, kind, n_seen)
            if not ok:
                expected_bad.append(i)
        report = validate_data(path, kind, max_reported=len(records))
        assert report.total_violations == len(expected_bad), kind
        assert [line for line, _ in report.violations] == expected_bad, kind


def test_load_examples_require(tmp_path):
    path = tmp_path / "d.jsonl"
    write_lines(path, ['{"text": "a b", "label": 1}', '{"text": "b"}'])
    vocab = small_vocab()
    examples = load_examples(path, vocab)
    assert examples[0].label == 1
    assert examples[1].label is None
    with pytest.raises(DataValidationError) as err:
        load_examples(path, vocab, require="label")
    assert err.value.line == 2
    with pytest.raises(DataValidationError) as err:
        load_examples(path, vocab, require="probs")
    assert err.value.line == 1


def test_load_examples_pairs_and_probs(tmp_path):
    path = tmp_path / "d.jsonl"
    write_lines(path, ['{"text1": "a", "text2": "b", "probs": [0.3, 0.7]}'])
    examples = load_examples(path, small_vocab(), require="probs")
    pair = examples[0]
    assert pair.left.ids == [0]
    assert pair.right.ids == [1]
    assert pair.teacher_probs == [0.3, 0.7]


def test_load_texts_plain_and_jsonl(tmp_path):
    plain = tmp_path / "docs.txt"
    plain.write_text("a b\n\nc d\n", encoding="utf-8")
    assert load_texts(plain) == ["a b", "c d"]
    jl = tmp_path / "docs.jsonl"
    write_lines(jl, ['{"text": "a"}', '{"text1": "b", "text2": "c"}'])
    assert load_texts(jl) == ["a", "b", "c"]


def test_write_metrics_csv(tmp_path):
    path = tmp_path / "m.csv"
    write_metrics_csv(path, [MetricsRow(step=5, split="dev", loss=0.5,
                                        accuracy=0.875)])
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "step,split,loss,accuracy"
    step, split, loss, acc = lines[1].split(",")
    assert (step, split) == ("5", "dev")
    assert math.isclose(float(loss), 0.5)
    assert math.isclose(float(acc), 0.875)
