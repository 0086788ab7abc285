"""Confusion counts and the four imbalance metrics.

The minority class is the positive class.  Any metric whose denominator
vanishes is reported as 0.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import LengthMismatch

METRIC_NAMES = ("precision", "recall", "g_mean", "f1")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v!r}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class MetricReport:
    precision: float
    recall: float
    g_mean: float
    f1: float
    counts: ConfusionCounts

    def as_dict(self) -> dict:
        d = {name: getattr(self, name) for name in METRIC_NAMES}
        d.update(asdict(self.counts))
        return d


def confusion(y_true, y_pred) -> ConfusionCounts:
    """Count outcomes for binary labels (1 = minority/positive)."""
    y_true = np.asarray(y_true).astype(bool)
    y_pred = np.asarray(y_pred).astype(bool)
    if y_true.shape != y_pred.shape:
        raise LengthMismatch(f"{y_true.size} true labels vs {y_pred.size} predictions")
    tp = int(np.count_nonzero(y_true & y_pred))
    fp = int(np.count_nonzero(~y_true & y_pred))
    tn = int(np.count_nonzero(~y_true & ~y_pred))
    fn = int(np.count_nonzero(y_true & ~y_pred))
    return ConfusionCounts(tp, fp, tn, fn)


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def metrics(counts: ConfusionCounts) -> MetricReport:
    precision = _ratio(counts.tp, counts.tp + counts.fp)
    recall = _ratio(counts.tp, counts.tp + counts.fn)
    specificity = _ratio(counts.tn, counts.fp + counts.tn)
    g_mean = math.sqrt(recall * specificity)
    f1 = 2 * recall * precision / (recall + precision) if recall + precision else 0.0
    return MetricReport(precision, recall, g_mean, f1, counts)
