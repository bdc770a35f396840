"""JSONL dataset I/O and schema validation.

One object per line: {"text": str, "label": int?} for single-sentence,
{"text1": str, "text2": str, "label": int?} for pairs, soft labels via
{"probs": [float, ...]}.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

from .errors import DataValidationError
from .featurize import featurize, featurize_pair

PROB_SUM_TOL = 1e-6

KINDS = ("labeled", "soft", "corpus")


def read_jsonl(path):
    """Yield (line_number, object) for every non-blank line."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataValidationError(f"invalid JSON: {exc}", line=lineno) from exc


def write_jsonl(path, objects):
    with open(path, "w", encoding="utf-8") as fh:
        for obj in objects:
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def _check_record(obj, kind, n_classes_seen):
    """Return (violation message or None, n_classes or None)."""
    is_pair = "text1" in obj or "text2" in obj
    if is_pair:
        for key in ("text1", "text2"):
            if not isinstance(obj.get(key), str):
                return f"missing or non-string field {key!r}", None
    elif not isinstance(obj.get("text"), str):
        return "missing or non-string field 'text'", None

    n_classes = None
    if kind == "labeled":
        label = obj.get("label")
        if not isinstance(label, int) or isinstance(label, bool) or label < 0:
            return "missing or invalid 'label' (need non-negative int)", None
    elif kind == "soft":
        probs = obj.get("probs")
        if (not isinstance(probs, list) or len(probs) < 2
                or not all(isinstance(p, (int, float)) and not isinstance(p, bool)
                           for p in probs)):
            return "missing or invalid 'probs' (need list of >= 2 floats)", None
        if any(p < 0 for p in probs):
            return "negative probability", None
        total = sum(probs)
        if abs(total - 1.0) > PROB_SUM_TOL:
            return f"probs sum to {total:.6f}, expected 1", None
        n_classes = len(probs)
        if n_classes_seen is not None and n_classes != n_classes_seen:
            return (f"probs length {n_classes} differs from "
                    f"earlier lines ({n_classes_seen})"), None
    return None, n_classes


@dataclass
class ValidationReport:
    path: str
    kind: str
    records: int = 0
    violations: list[tuple[int, str]] = field(default_factory=list)
    total_violations: int = 0

    @property
    def ok(self):
        return self.total_violations == 0


def validate_data(path, kind, max_reported=10) -> ValidationReport:
    """Schema-check a JSONL file, reporting the first violations with line numbers."""
    if kind not in KINDS:
        raise DataValidationError(f"unknown dataset kind {kind!r}")
    report = ValidationReport(path=str(path), kind=kind)
    n_classes_seen = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            report.records += 1
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                report.total_violations += 1
                if len(report.violations) < max_reported:
                    report.violations.append((lineno, f"invalid JSON: {exc}"))
                continue
            msg, n_classes = _check_record(obj, kind, n_classes_seen)
            if n_classes is not None and n_classes_seen is None:
                n_classes_seen = n_classes
            if msg is not None:
                report.total_violations += 1
                if len(report.violations) < max_reported:
                    report.violations.append((lineno, msg))
    return report


def load_examples(path, vocab, n_cutoff=None, require=None):
    """Featurize a JSONL dataset under vocab.

    require: None, "label", or "probs"; missing fields raise with line number.
    """
    examples = []
    for lineno, obj in read_jsonl(path):
        label = obj.get("label")
        probs = obj.get("probs")
        if require == "label" and label is None:
            raise DataValidationError("missing 'label'", line=lineno)
        if require == "probs" and probs is None:
            raise DataValidationError("missing 'probs'", line=lineno)
        if "text1" in obj:
            examples.append(featurize_pair(obj["text1"], obj["text2"], vocab,
                                           n_cutoff, label=label,
                                           teacher_probs=probs))
        else:
            examples.append(featurize(obj["text"], vocab, n_cutoff, label=label,
                                      teacher_probs=probs))
    return examples


def load_texts(path):
    """Raw texts from a JSONL dataset (or plain text file, one doc per line)."""
    texts = []
    if str(path).endswith((".jsonl", ".json")):
        for _, obj in read_jsonl(path):
            if "text1" in obj:
                texts.append(obj["text1"])
                texts.append(obj["text2"])
            else:
                texts.append(obj["text"])
    else:
        with open(path, encoding="utf-8") as fh:
            texts = [line.rstrip("\n") for line in fh if line.strip()]
    return texts


def write_metrics_csv(path, metrics):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "split", "loss", "accuracy"])
        for row in metrics:
            writer.writerow([row.step, row.split, f"{row.loss:.6f}",
                             f"{row.accuracy:.6f}"])
