"""Confusion-matrix metrics with class 1 (the minority) as positive."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DataError
from .nn import check_labels


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise DataError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MetricReport:
    precision: float
    recall: float
    specificity: float
    f1: float
    gmean: float

    def to_dict(self) -> dict:
        return asdict(self)


def confusion(labels_true, labels_pred) -> ConfusionMatrix:
    t = check_labels(labels_true)
    p = check_labels(labels_pred)
    if t.shape != p.shape:
        raise DataError(f"{t.size} true labels but {p.size} predictions")
    tp = int(np.count_nonzero((t == 1) & (p == 1)))
    fp = int(np.count_nonzero((t == 0) & (p == 1)))
    fn = int(np.count_nonzero((t == 1) & (p == 0)))
    return ConfusionMatrix(tp, fp, fn, t.size - tp - fp - fn)


def _ratio(num: int, den: int) -> float:
    # 0/0 is reported as 0, the convention behind the all-zero MLP rows
    return num / den if den else 0.0


def metric_report(cm: ConfusionMatrix) -> MetricReport:
    if cm.total == 0:
        raise DataError("cannot score an empty confusion matrix")
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    specificity = _ratio(cm.tn, cm.fp + cm.tn)
    denom = precision + recall
    f1 = 2.0 * precision * recall / denom if denom > 0 else 0.0
    return MetricReport(precision, recall, specificity, f1, math.sqrt(recall * specificity))


def evaluate(labels_true, probs, threshold: float = 0.5) -> tuple[ConfusionMatrix, MetricReport]:
    """Threshold ``probs`` (label 1 iff ``p > threshold``) and score them."""
    pred = (np.asarray(probs) > threshold).astype(np.int64)
    cm = confusion(labels_true, pred)
    return cm, metric_report(cm)


def expense(cm_prev: ConfusionMatrix, cm_next: ConfusionMatrix) -> float | None:
    """False positives paid per false negative recovered between two settings.

    ``(fp_next - fp_prev) / (fn_prev - fn_next)``. Returns ``None`` when the
    FN count did not change. A negative denominator (FN went up) is kept
    with its sign.
    """
    dfn = cm_prev.fn - cm_next.fn
    if dfn == 0:
        return None
    return (cm_next.fp - cm_prev.fp) / dfn
