"""Accuracy, TP/FP/FN, precision and recall over labelled test sets.

Counting rules:

* TP: predicted label equals the true label (no-class included).
* FP: true label is no-class, predicted label is a class.
* FN: true label is a class, predicted label is no-class.

Class-for-class confusions count towards ``tests`` only.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from .classifier import NO_CLASS_NAME, SvmModel
from .errors import InvalidArgument, ManifestError, SalientCropError
from .imaging import read_image


@dataclass(frozen=True)
class EvalCounts:
    tests: int = 0
    tp: int = 0
    fp: int = 0
    fn_: int = 0


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float


def _name(label) -> str:
    return label if isinstance(label, str) else label.name


def tally(predictions) -> EvalCounts:
    """Count outcomes over ``(true_label, predicted_label)`` pairs."""
    tests = tp = fp = fn = 0
    for true, pred in predictions:
        true, pred = _name(true), _name(pred)
        tests += 1
        if true == pred:
            tp += 1
        elif true == NO_CLASS_NAME:
            fp += 1
        elif pred == NO_CLASS_NAME:
            fn += 1
    return EvalCounts(tests, tp, fp, fn)


def metrics(counts: EvalCounts) -> Metrics:
    if counts.tests <= 0:
        raise InvalidArgument("metrics need at least one test")
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 1.0
    recall = counts.tp / (counts.tp + counts.fn_) if counts.tp + counts.fn_ else 1.0
    return Metrics(counts.tp / counts.tests, precision, recall)


def percent(ratio: float) -> int:
    """Integer percentage, rounding halves up."""
    return int(Decimal(repr(ratio * 100)).quantize(Decimal(1), rounding=ROUND_HALF_UP))


@dataclass
class EvalReport:
    counts: EvalCounts
    metrics: Metrics
    confusion: dict[str, dict[str, int]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        c, m = self.counts, self.metrics
        return {
            "counts": {"tests": c.tests, "tp": c.tp, "fp": c.fp, "fn": c.fn_},
            "ratios": {"accuracy": m.accuracy, "precision": m.precision, "recall": m.recall,
                       "fp_rate": c.fp / c.tests, "fn_rate": c.fn_ / c.tests},
            "percent": {"accuracy": percent(m.accuracy), "precision": percent(m.precision),
                        "recall": percent(m.recall), "fp": percent(c.fp / c.tests),
                        "fn": percent(c.fn_ / c.tests)},
            "confusion": self.confusion,
        }


def confusion_matrix(pairs, names) -> dict[str, dict[str, int]]:
    names = list(names) + [NO_CLASS_NAME]
    table = {t: {p: 0 for p in names} for t in names}
    for true, pred in pairs:
        table[_name(true)][_name(pred)] += 1
    return table


def report(pairs, names) -> EvalReport:
    pairs = list(pairs)
    counts = tally(pairs)
    return EvalReport(counts, metrics(counts), confusion_matrix(pairs, names))


def read_manifest(path, known_labels) -> list[tuple[Path, str]]:
    """Rows of a ``path,label`` CSV; relative paths resolve against the CSV's directory."""
    path = Path(path)
    allowed = set(known_labels) | {NO_CLASS_NAME}
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["path", "label"]:
                raise ManifestError(f"{path}: header must be 'path,label'")
            rows = []
            for lineno, row in enumerate(reader, start=2):
                image, label = (row.get("path") or "").strip(), (row.get("label") or "").strip()
                if not image or label not in allowed:
                    raise ManifestError(f"{path}:{lineno}: bad row {row!r}")
                image_path = Path(image)
                if not image_path.is_absolute():
                    image_path = path.parent / image_path
                rows.append((image_path, label))
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    return rows


def evaluate(model: SvmModel, vocab, dataset, params=None) -> EvalReport:
    """Classify every ``(path_or_image, label)`` item and score the results.

    ``dataset`` is a manifest path or an iterable of pairs; images may be
    paths or :class:`RasterImage` objects.
    """
    from .pipeline import PipelineParams, classify_image

    params = params or PipelineParams()
    items = read_manifest(dataset, model.labels) if isinstance(dataset, (str, Path)) else list(dataset)
    if not items:
        raise InvalidArgument("dataset is empty")
    pairs = []
    for image, label in items:
        if isinstance(image, (str, Path)):
            try:
                image = read_image(image)
            except (OSError, SalientCropError) as exc:
                raise ManifestError(f"cannot load {image}: {exc}") from exc
        pred, _ = classify_image(image, vocab, model, params)
        pairs.append((_name(label), pred.name))
    return report(pairs, model.labels)
