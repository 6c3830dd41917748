"""Confusion matrices, derived metrics, ROC curves and rank-based AUC."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import ScreenEvalError, UndefinedMetricError

THRESHOLD_MODES = ("ge", "gt")
METRIC_NAMES = ("auc", "sensitivity", "specificity", "accuracy", "f1")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn_: int
    fp: int
    tn: int

    @property
    def positives(self) -> int:
        return self.tp + self.fn_

    @property
    def negatives(self) -> int:
        return self.fp + self.tn

    @property
    def total(self) -> int:
        return self.tp + self.fn_ + self.fp + self.tn

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fn": self.fn_, "fp": self.fp, "tn": self.tn}

    @classmethod
    def from_dict(cls, d: dict) -> ConfusionMatrix:
        return cls(int(d["tp"]), int(d["fn"]), int(d["fp"]), int(d["tn"]))


@dataclass(frozen=True)
class MetricSet:
    sensitivity: float
    specificity: float
    accuracy: float
    f1: float
    precision: float | None

    def get(self, name: str) -> float:
        return getattr(self, name)

    def as_dict(self) -> dict:
        return {
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "accuracy": self.accuracy,
            "f1": self.f1,
            "precision": self.precision,
        }


@dataclass(frozen=True)
class RocCurve:
    points: tuple[tuple[float, float, float], ...]  # (threshold, fpr, tpr)
    auc: float

    @property
    def fpr(self) -> list[float]:
        return [p[1] for p in self.points]

    @property
    def tpr(self) -> list[float]:
        return [p[2] for p in self.points]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("threshold,fpr,tpr\n")
        for thr, fpr, tpr in self.points:
            buf.write(f"{_fmt(thr)},{_fmt(fpr)},{_fmt(tpr)}\n")
        return buf.getvalue()


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def as_arrays(scored) -> tuple[np.ndarray, np.ndarray]:
    """Accept a sequence of (score, label) pairs or a ``(scores, labels)`` tuple of arrays."""
    if isinstance(scored, tuple) and len(scored) == 2 and isinstance(scored[0], np.ndarray):
        scores, labels = scored
    else:
        pairs = list(scored)
        if not pairs:
            return np.empty(0, dtype=float), np.empty(0, dtype=np.int64)
        scores = np.fromiter((p[0] for p in pairs), dtype=float, count=len(pairs))
        labels = np.fromiter((p[1] for p in pairs), dtype=np.int64, count=len(pairs))
    return np.asarray(scores, dtype=float), np.asarray(labels, dtype=np.int64)


def check_mode(mode: str) -> str:
    if mode not in THRESHOLD_MODES:
        raise ScreenEvalError(f"unknown threshold mode {mode!r}; expected 'ge' or 'gt'")
    return mode


def predict(scores: np.ndarray, threshold: float, mode: str = "ge") -> np.ndarray:
    if check_mode(mode) == "ge":
        return scores >= threshold
    return scores > threshold


def confusion_at(scored, threshold: float, mode: str = "ge") -> ConfusionMatrix:
    """Tally predictions against labels; positive iff ``score >= threshold`` (``>`` for mode "gt")."""
    scores, labels = as_arrays(scored)
    if scores.size == 0:
        raise ScreenEvalError("no records to evaluate")
    pred = predict(scores, threshold, mode)
    pos = labels == 1
    tp = int(np.count_nonzero(pred & pos))
    fn_ = int(np.count_nonzero(~pred & pos))
    fp = int(np.count_nonzero(pred & ~pos))
    tn = int(np.count_nonzero(~pred & ~pos))
    return ConfusionMatrix(tp, fn_, fp, tn)


def f1_from_counts(tp: int, fp: int, fn_: int) -> float:
    denom = 2 * tp + fp + fn_
    return 0.0 if denom == 0 else 2 * tp / denom


def metrics_from_confusion(c: ConfusionMatrix) -> MetricSet:
    if c.positives == 0:
        raise UndefinedMetricError("sensitivity", "no positive records")
    if c.negatives == 0:
        raise UndefinedMetricError("specificity", "no negative records")
    return MetricSet(
        sensitivity=c.tp / c.positives,
        specificity=c.tn / c.negatives,
        accuracy=(c.tp + c.tn) / c.total,
        f1=f1_from_counts(c.tp, c.fp, c.fn_),
        precision=c.tp / (c.tp + c.fp) if c.tp + c.fp else None,
    )


# --------------------------------------------------------------------------
# ranking


def class_counts_by_score(scores: np.ndarray, labels: np.ndarray, weights: np.ndarray | None = None):
    """Distinct scores (ascending) with the positive and negative count at each.

    ``weights`` gives integer multiplicities per record (bootstrap resamples).
    Ties are resolved here once; AUC and ROC are both built from these counts.
    """
    distinct, inverse = np.unique(scores, return_inverse=True)
    pos_mask = labels == 1
    if weights is None:
        pos = np.bincount(inverse[pos_mask], minlength=distinct.size)
        neg = np.bincount(inverse[~pos_mask], minlength=distinct.size)
    else:
        pos = np.bincount(inverse[pos_mask], weights=weights[pos_mask], minlength=distinct.size)
        neg = np.bincount(inverse[~pos_mask], weights=weights[~pos_mask], minlength=distinct.size)
    return distinct, pos.astype(np.int64), neg.astype(np.int64)


def auc_from_counts(pos: np.ndarray, neg: np.ndarray) -> float:
    """Mann-Whitney AUC from per-distinct-score class counts (ascending score order).

    Counts each positive-negative pair once: 1 if the positive scores higher,
    1/2 on a tie.  Integer arithmetic keeps the result exactly equal to the
    pairwise definition.
    """
    n_pos = int(pos.sum())
    n_neg = int(neg.sum())
    if n_pos == 0:
        raise UndefinedMetricError("auc", "no positive records")
    if n_neg == 0:
        raise UndefinedMetricError("auc", "no negative records")
    neg_below = np.cumsum(neg) - neg
    twice_u = int(np.dot(pos, 2 * neg_below + neg))
    return twice_u / (2 * n_pos * n_neg)


def auc(scored) -> float:
    scores, labels = as_arrays(scored)
    _, pos, neg = class_counts_by_score(scores, labels)
    return auc_from_counts(pos, neg)


def roc_points(scored) -> RocCurve:
    """Operating points swept over distinct scores, highest first.

    The first point uses a threshold of +inf (nothing flagged), so the curve
    runs from (0, 0) to (1, 1).  Tied scores move together.
    """
    scores, labels = as_arrays(scored)
    distinct, pos, neg = class_counts_by_score(scores, labels)
    value = auc_from_counts(pos, neg)
    n_pos, n_neg = int(pos.sum()), int(neg.sum())
    tps = np.cumsum(pos[::-1])
    fps = np.cumsum(neg[::-1])
    points = [(math.inf, 0.0, 0.0)]
    for thr, tp, fp in zip(distinct[::-1], tps, fps):
        points.append((float(thr), int(fp) / n_neg, int(tp) / n_pos))
    return RocCurve(tuple(points), value)


def trapezoid_area(curve: RocCurve) -> float:
    area = 0.0
    prev_x, prev_y = 0.0, 0.0
    for _, x, y in curve.points[1:]:
        area += (x - prev_x) * (y + prev_y) / 2.0
        prev_x, prev_y = x, y
    return area


def metric_value(name: str, scored, threshold: float | None = None, mode: str = "ge") -> float:
    """Evaluate one named metric; threshold metrics need ``threshold``."""
    if name == "auc":
        return auc(scored)
    if name not in METRIC_NAMES:
        raise ScreenEvalError(f"unknown metric {name!r}; expected one of {', '.join(METRIC_NAMES)}")
    if threshold is None:
        raise ScreenEvalError(f"metric {name!r} needs a threshold")
    return metrics_from_confusion(confusion_at(scored, threshold, mode)).get(name)

