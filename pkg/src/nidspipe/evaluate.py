"""Confusion-matrix metrics, ROC curves and AUC. Positive class = attack (1)."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn}


def _binary(v, name):
    arr = np.asarray(v)
    if arr.ndim != 1:
        raise DataError(f"{name} must be one-dimensional")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise DataError(f"{name} contains non-binary labels")
    return arr.astype(np.int64)


def confusion(predicted, actual) -> ConfusionMatrix:
    p = _binary(predicted, "predicted")
    a = _binary(actual, "actual")
    if len(p) != len(a):
        raise DataError(f"length mismatch: {len(p)} predictions, {len(a)} labels")
    return ConfusionMatrix(
        tp=int(np.sum((p == 1) & (a == 1))),
        tn=int(np.sum((p == 0) & (a == 0))),
        fp=int(np.sum((p == 1) & (a == 0))),
        fn=int(np.sum((p == 0) & (a == 1))),
    )


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise DataError("accuracy of an empty confusion matrix")
    return (cm.tp + cm.tn) / cm.total


def detection_rate(cm: ConfusionMatrix) -> float:
    if cm.tp + cm.fn == 0:
        raise DataError("detection rate undefined without actual positives")
    return cm.tp / (cm.tp + cm.fn)


def false_positive_rate(cm: ConfusionMatrix) -> float:
    if cm.fp + cm.tn == 0:
        raise DataError("false positive rate undefined without actual negatives")
    return cm.fp / (cm.fp + cm.tn)


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def validate(self) -> None:
        if len(self.fpr) != len(self.tpr) or len(self.fpr) < 2:
            raise DataError("malformed ROC curve")
        if self.points[0] != (0.0, 0.0) or self.points[-1] != (1.0, 1.0):
            raise DataError("ROC curve must run from (0,0) to (1,1)")
        if np.any(np.diff(self.fpr) < 0) or np.any(np.diff(self.tpr) < 0):
            raise DataError("ROC curve is not monotone")

    def write_csv(self, path) -> None:
        with open(Path(path), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["threshold", "fpr", "tpr"])
            for t, f, p in zip(self.thresholds, self.fpr, self.tpr):
                w.writerow([repr(float(t)), repr(float(f)), repr(float(p))])


def roc_curve(scores, actual) -> RocCurve:
    """Sweep every distinct score as a threshold (predict positive when score >= t).

    Tied scores form one step. The curve starts at (0,0) with threshold +inf
    and ends at (1,1); a final -inf point is added only if needed.
    """
    s = np.asarray(scores, dtype=np.float64)
    a = _binary(actual, "actual")
    if len(s) != len(a):
        raise DataError("scores and labels differ in length")
    n_pos = int(a.sum())
    n_neg = len(a) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("ROC needs both classes among the actual labels")
    order = np.argsort(-s, kind="stable")
    s_sorted, a_sorted = s[order], a[order]
    last_of_run = np.flatnonzero(np.r_[s_sorted[1:] != s_sorted[:-1], True])
    tp = np.cumsum(a_sorted)[last_of_run]
    fp = (last_of_run + 1) - tp
    fpr = np.r_[0.0, fp / n_neg]
    tpr = np.r_[0.0, tp / n_pos]
    thr = np.r_[np.inf, s_sorted[last_of_run]]
    if (fpr[-1], tpr[-1]) != (1.0, 1.0):
        fpr, tpr, thr = np.r_[fpr, 1.0], np.r_[tpr, 1.0], np.r_[thr, -np.inf]
    return RocCurve(fpr, tpr, thr)


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the (fpr, tpr) polyline."""
    curve.validate()
    return float(np.sum(np.diff(curve.fpr) * (curve.tpr[1:] + curve.tpr[:-1]) / 2.0))


def metrics_summary(predicted, actual, scores=None) -> dict:
    """Accuracy, detection rate, FPR (and AUC when scores are given) for one classifier."""
    cm = confusion(predicted, actual)
    out = {
        "confusion": cm.to_dict(),
        "accuracy": accuracy(cm),
        "detection_rate": detection_rate(cm),
        "false_positive_rate": false_positive_rate(cm),
    }
    if scores is not None:
        out["auc"] = auc(roc_curve(scores, actual))
    return out
