"""Evaluation metrics: accuracy, worst-case robustness, and invariance.

The invariance test scores how often a sample's transformed copies are its
own nearest neighbors in logit space: per class, a pool holds every
transformed copy of every sample (one block per transform, sample order
preserved inside each block); each original sample retrieves its t nearest
pool members under L1 distance and is scored by the overlap with its own t
copies.  Scores average over samples, then over classes.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .datasets import LabeledImages
from .errors import DegenerateInputError, MergeError
from .model import Classifier, logits_array, predict_classes
from .transforms import TransformFamily, apply_batch
from .wasserstein import w1_exact

METHOD_ORDER = ("B", "V", "L", "S", "C", "K", "W", "D")


@dataclass
class EvalReport:
    """The three headline metrics plus the per-class invariance detail."""

    accuracy: float
    robust_accuracy: float
    invariance: float
    per_class_invariance: tuple
    family: str
    seed: int


def accuracy(model: Classifier, data: LabeledImages) -> float:
    """Fraction of samples whose predicted class matches the label."""
    if len(data) == 0:
        raise ValueError("cannot evaluate on empty data")
    return float(np.mean(predict_classes(model, data.images) == data.labels))


def robust_accuracy(model: Classifier, data: LabeledImages,
                    family: TransformFamily) -> float:
    """Fraction classified correctly under every member of the family."""
    if len(data) == 0:
        raise ValueError("cannot evaluate on empty data")
    correct = np.ones(len(data), dtype=bool)
    for t in family:
        preds = predict_classes(model, apply_batch(t, data.images))
        correct &= preds == data.labels
    return float(np.mean(correct))


def invariance_per_class(model: Classifier, data: LabeledImages,
                         family: TransformFamily) -> np.ndarray:
    """Per-class nearest-neighbor overlap scores, classes in label order."""
    t = len(family)
    scores = np.zeros(data.num_classes)
    for cls in range(data.num_classes):
        members = np.flatnonzero(data.labels == cls)
        m = members.size
        if m < 2:
            raise DegenerateInputError(
                f"class {cls} has {m} sample(s); the invariance test needs >= 2")
        originals = data.images[members]
        query = logits_array(model, originals)
        pool = np.concatenate(
            [logits_array(model, apply_batch(a, originals)) for a in family])
        dists = np.abs(query[:, None, :] - pool[None, :, :]).sum(axis=2)
        # stable sort resolves distance ties toward the lower pool index
        nearest = np.argsort(dists, axis=1, kind="stable")[:, :t]
        own = np.arange(m)[:, None] + m * np.arange(t)[None, :]
        overlap = [np.intersect1d(nearest[s], own[s]).size for s in range(m)]
        scores[cls] = np.mean(overlap) / t
    return scores


def invariance_score(model: Classifier, data: LabeledImages,
                     family: TransformFamily) -> float:
    """Average invariance over classes; in [1/t, 1] with identity present."""
    return float(invariance_per_class(model, data, family).mean())


def wasserstein_invariance(model: Classifier, data: LabeledImages,
                           family: TransformFamily) -> float:
    """Largest pairwise W1 gap between any two transformed logit sets.

    The unbounded forerunner of the invariance test; reported as a
    diagnostic only.
    """
    if len(family) < 2:
        raise ValueError("need at least two family members")
    sets = [logits_array(model, apply_batch(a, data.images)) for a in family]
    worst = 0.0
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            worst = max(worst, w1_exact(sets[i], sets[j]))
    return worst


def evaluate(model: Classifier, data: LabeledImages, family: TransformFamily,
             seed: int) -> EvalReport:
    """All three metrics in one report."""
    per_class = invariance_per_class(model, data, family)
    return EvalReport(
        accuracy=accuracy(model, data),
        robust_accuracy=robust_accuracy(model, data, family),
        invariance=float(per_class.mean()),
        per_class_invariance=tuple(float(x) for x in per_class),
        family=family.family_name,
        seed=seed,
    )


@dataclass
class MetricsRow:
    """One evaluated run; the unit record of metrics.csv."""

    method: str
    shift: str
    seed: int
    lam: Optional[float]
    accuracy: float
    robustness: float
    invariance: float


CSV_HEADER = ["method", "shift", "seed", "lambda", "accuracy", "robustness", "invariance"]


def rows_to_csv(rows: Sequence[MetricsRow]) -> str:
    """Serialize metric rows; floats use shortest round-trip form."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([
            r.method, r.shift, r.seed,
            "" if r.lam is None else repr(float(r.lam)),
            repr(float(r.accuracy)), repr(float(r.robustness)),
            repr(float(r.invariance)),
        ])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[MetricsRow]:
    """Inverse of rows_to_csv."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != CSV_HEADER:
        raise MergeError(f"unexpected metrics header {header}")
    out = []
    for rec in reader:
        method, shift, seed, lam, acc, rob, inv = rec
        out.append(MetricsRow(method, shift, int(seed),
                              None if lam == "" else float(lam),
                              float(acc), float(rob), float(inv)))
    return out


def _method_columns(rows: Sequence[MetricsRow]) -> list[str]:
    present = {r.method for r in rows}
    cols = [m for m in METHOD_ORDER if m in present]
    cols += sorted(present - set(METHOD_ORDER))
    return cols


def summarize(rows: Sequence[MetricsRow]) -> dict:
    """Mean and population std over seeds for every (shift, method, metric)."""
    groups: dict[tuple, dict[str, list]] = {}
    for r in rows:
        cell = groups.setdefault((r.shift, r.method), {
            "accuracy": [], "robustness": [], "invariance": []})
        cell["accuracy"].append(r.accuracy)
        cell["robustness"].append(r.robustness)
        cell["invariance"].append(r.invariance)
    return {
        key: {metric: (float(np.mean(vals)), float(np.std(vals)))
              for metric, vals in cell.items()}
        for key, cell in groups.items()
    }


METRIC_LABELS = (("accuracy", "Accuracy"), ("robustness", "Robustness"),
                 ("invariance", "Invariance"))


def format_table(rows: Sequence[MetricsRow],
                 lambda_by_method: Optional[dict] = None) -> str:
    """Aligned text table: three metric rows per shift, methods as columns.

    Values are percentages, mean +- std over seeds.  AR methods can carry
    their selected lambda in the column header.
    """
    if not rows:
        raise MergeError("no rows to tabulate")
    summary = summarize(rows)
    methods = _method_columns(rows)
    shifts = sorted({r.shift for r in rows})

    def header_label(m):
        if lambda_by_method and lambda_by_method.get(m) is not None:
            return f"{m} (lam={lambda_by_method[m]:g})"
        return m

    headers = ["shift", "metric"] + [header_label(m) for m in methods]
    body = []
    for shift in shifts:
        for metric, label in METRIC_LABELS:
            line = [shift, label]
            for m in methods:
                cell = summary.get((shift, m))
                if cell is None:
                    line.append("-")
                else:
                    mean, std = cell[metric]
                    line.append(f"{100 * mean:.1f}+-{100 * std:.1f}")
            body.append(line)
    widths = [max(len(h), *(len(r[i]) for r in body)) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for r in body:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(lines) + "\n"


def summary_csv(rows: Sequence[MetricsRow]) -> str:
    """Long-form CSV of the summarized table."""
    summary = summarize(rows)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["shift", "metric", "method", "mean", "std"])
    for shift in sorted({k[0] for k in summary}):
        for metric, _ in METRIC_LABELS:
            for method in _method_columns(
                    [r for r in rows if r.shift == shift]):
                cell = summary.get((shift, method))
                if cell is None:
                    continue
                mean, std = cell[metric]
                writer.writerow([shift, metric, method, repr(mean), repr(std)])
    return buf.getvalue()
