"""Percentile bootstrap confidence intervals for screening metrics.

Resampling RNG: numpy ``PCG64`` seeded with ``SeedSequence([seed, block])``,
where each block holds 64 consecutive replicates drawn row by row.  Any
replicate can be regenerated alone, and batching never changes the results.  Interval bounds are empirical
quantiles with linear interpolation between order statistics (numpy's
``method="linear"``, type 7 in Hyndman & Fan).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import PredictionRecord, group_records
from .errors import ConfigError, ScreenEvalError
from .metrics import (
    METRIC_NAMES,
    check_mode,
    confusion_at,
    metric_value,
    metrics_from_confusion,
)
from .voting import VoteStrategy, aggregate_dataset, scored_pairs

log = logging.getLogger(__name__)

UNITS = ("photo", "subject")
EXCLUSION_WARNING = 0.01
# replicates are evaluated in batches of at most this many weight cells
BATCH_CELLS = 2_000_000
# replicates sharing one random stream; part of the seeding contract, do not change
REPLICATE_BLOCK = 64


@dataclass(frozen=True)
class BootstrapConfig:
    replicates: int = 1000
    confidence: float = 0.95
    seed: int = 0
    unit: str = "photo"

    def __post_init__(self):
        if not isinstance(self.replicates, int) or self.replicates < 1:
            raise ConfigError(f"replicates must be a positive integer, got {self.replicates!r}")
        if not 0.0 < self.confidence < 1.0:
            raise ConfigError(f"confidence must lie in (0, 1), got {self.confidence!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.unit not in UNITS:
            raise ConfigError(f"unit must be photo or subject, got {self.unit!r}")


@dataclass(frozen=True)
class IntervalEstimate:
    point: float
    lower: float
    upper: float
    excluded_replicates: int = 0

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def render(self, digits: int = 3) -> str:
        return f"{self.point:.{digits}f}({self.lower:.{digits}f}-{self.upper:.{digits}f})"

    def as_dict(self) -> dict:
        return {
            "point": self.point,
            "lower": self.lower,
            "upper": self.upper,
            "excluded_replicates": self.excluded_replicates,
        }


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Stream for replicates ``block*REPLICATE_BLOCK`` up to the next block boundary."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, block])))


def resample_indices(seed: int, replicates: range, size: int) -> np.ndarray:
    """Drawn unit indices, one row per replicate.

    Replicate i is row ``i % REPLICATE_BLOCK`` of its block's stream, so any
    replicate can be regenerated on its own and the result never depends on
    how replicates are batched.
    """
    rows = []
    i = replicates.start
    while i < replicates.stop:
        block, offset = divmod(i, REPLICATE_BLOCK)
        stop = min(replicates.stop, (block + 1) * REPLICATE_BLOCK)
        drawn = block_rng(seed, block).integers(0, size, size=(stop - block * REPLICATE_BLOCK, size))
        rows.append(drawn[offset:])
        i = stop
    return np.concatenate(rows) if rows else np.empty((0, size), dtype=np.int64)


class _Sample:
    """Array view of records prepared for repeated weighted evaluation."""

    def __init__(self, records: Sequence[PredictionRecord], level: str,
                 strategy: VoteStrategy | None, threshold: float | None, mode: str):
        self.level = level
        self.strategy = strategy
        self.threshold = threshold
        self.mode = mode
        # sort by (subject, score) so each subject is a contiguous, score-ascending block
        subj_ids = np.array([r.subject_id for r in records], dtype=object)
        uniq, subj = np.unique(subj_ids, return_inverse=True)
        scores = np.array([r.score for r in records], dtype=float)
        labels = np.array([r.label for r in records], dtype=np.int64)
        order = np.lexsort((scores, subj))
        self.scores, self.labels, self.subj = scores[order], labels[order], subj[order]
        self.n, self.m = len(records), uniq.size
        self.starts = np.flatnonzero(np.r_[True, self.subj[1:] != self.subj[:-1]])
        self.subj_labels = self.labels[self.starts]
        self.is_pos = self.labels == 1

        if level == "subject" and strategy is VoteStrategy.MAX:
            # a max-voted subject score is always one of the record scores
            self.record_distinct, self.record_rank = np.unique(self.scores, return_inverse=True)
        if level == "image":
            self.unit_scores, self.unit_labels = self.scores, self.labels
        else:
            groups = group_records(records)
            self.unit_scores = np.array([s.score for s in aggregate_dataset(groups, strategy)], dtype=float)
            self.unit_labels = self.subj_labels
        self._prep_fixed(self.unit_scores, self.unit_labels)

    def _prep_fixed(self, scores: np.ndarray, labels: np.ndarray):
        self.distinct, self.rank = np.unique(scores, return_inverse=True)
        self.unit_pos = labels == 1
        if self.threshold is not None:
            flagged = scores >= self.threshold if self.mode == "ge" else scores > self.threshold
            self.unit_flagged = flagged

    def draw_weights(self, seed: int, replicates: range, unit: str) -> np.ndarray:
        """Record multiplicities, one row per replicate (integer, n columns)."""
        size = self.n if unit == "photo" else self.m
        draws = resample_indices(seed, replicates, size)
        offset = draws + size * np.arange(len(replicates))[:, None]
        counts = np.bincount(offset.ravel(), minlength=size * len(replicates)).reshape(-1, size)
        return counts if unit == "photo" else counts[:, self.subj]

    def evaluate_batch(self, W: np.ndarray, unit: str, metrics: Sequence[str]) -> dict[str, np.ndarray]:
        """Metric values for a block of resamples (one row of ``W`` each).

        Rows in which a class is absent come back as NaN.
        """
        if self.level == "image":
            return self._from_fixed(W, metrics)
        if unit == "subject":
            # whole subjects drawn: the subject multiplicity is the weight of its first record
            return self._from_fixed(W[:, self.starts], metrics)
        return self._from_reaggregated(W, metrics)

    def _from_fixed(self, W: np.ndarray, metrics) -> dict[str, np.ndarray]:
        flagged = self.unit_flagged if self.threshold is not None else None
        return _batch_metrics(self.rank, self.distinct.size, W, self.unit_pos, flagged, metrics)

    def _from_reaggregated(self, W: np.ndarray, metrics) -> dict[str, np.ndarray]:
        # subjects are rebuilt from the photos drawn; each present subject counts once
        present = W > 0
        sub_pos = self.subj_labels == 1
        if self.strategy is VoteStrategy.MAX:
            idx = np.where(present, np.arange(self.n), -1)
            last = np.maximum.reduceat(idx, self.starts, axis=1)
            keep = last >= 0
            top = np.where(keep, last, 0)
            rank, k = self.record_rank[top], self.record_distinct.size
            sub_scores = self.scores[top]
        else:
            cnt = np.add.reduceat(W, self.starts, axis=1)
            tot = np.add.reduceat(W * self.scores, self.starts, axis=1)
            keep = cnt > 0
            sub_scores = np.clip(tot / np.maximum(cnt, 1), 0.0, 1.0)
            rank, k = _row_ranks(np.where(keep, sub_scores, np.inf))
        flagged = None
        if self.threshold is not None:
            flagged = sub_scores >= self.threshold if self.mode == "ge" else sub_scores > self.threshold
        return _batch_metrics(rank, k, keep.astype(np.int64), sub_pos, flagged, metrics)


def _row_ranks(S: np.ndarray) -> tuple[np.ndarray, int]:
    """Dense ascending rank of each entry within its row (ties share a rank)."""
    order = np.argsort(S, axis=1, kind="stable")
    sorted_s = np.take_along_axis(S, order, axis=1)
    new_group = np.concatenate((np.zeros((S.shape[0], 1), dtype=np.int64),
                                (sorted_s[:, 1:] != sorted_s[:, :-1]).astype(np.int64)), axis=1)
    dense = np.cumsum(new_group, axis=1)
    rank = np.empty_like(dense)
    np.put_along_axis(rank, order, dense, axis=1)
    return rank, S.shape[1]


def _binned(rank: np.ndarray, weights: np.ndarray, k: int) -> np.ndarray:
    """Per-row weighted histogram over ranks 0..k-1 (``rank`` may be shared by all rows)."""
    r = weights.shape[0]
    offset = rank + k * np.arange(r)[:, None]
    return np.bincount(offset.ravel(), weights=weights.ravel(), minlength=r * k).reshape(r, k)


def _batch_metrics(rank, k, W, col_pos, flagged, metrics) -> dict[str, np.ndarray]:
    """Metrics per row of ``W``; column classes are fixed by ``col_pos``.

    ``rank`` and ``flagged`` are per column (1-D) or per cell (2-D).
    """
    # all counts are integers below 2**53, so float arithmetic on them is exact
    w_pos, w_neg = W[:, col_pos], W[:, ~col_pos]
    n_pos = w_pos.sum(axis=1).astype(float)
    n_neg = w_neg.sum(axis=1).astype(float)
    valid = (n_pos > 0) & (n_neg > 0)
    out = {}
    with np.errstate(divide="ignore", invalid="ignore"):
        if "auc" in metrics:
            # each positive earns 2 per negative ranked below it and 1 per tie
            neg = _binned(rank[..., ~col_pos], w_neg, k)
            key = 2 * np.cumsum(neg, axis=1) - neg
            rank_pos = rank[..., col_pos]
            if rank_pos.ndim == 1:
                gathered = key[:, rank_pos]
            else:
                gathered = np.take_along_axis(key, rank_pos, axis=1)
            twice_u = np.einsum("ij,ij->i", w_pos, gathered)
            out["auc"] = twice_u / (2 * n_pos * n_neg)
        if any(m != "auc" for m in metrics):
            tp = (w_pos * flagged[..., col_pos]).sum(axis=1).astype(float)
            fp = (w_neg * flagged[..., ~col_pos]).sum(axis=1).astype(float)
            fn_, tn = n_pos - tp, n_neg - fp
            for name, value in _threshold_metrics(tp, fn_, fp, tn, metrics).items():
                out[name] = value
    return {m: np.where(valid, v, np.nan) for m, v in out.items()}


def _threshold_metrics(tp: int, fn_: int, fp: int, tn: int, metrics) -> dict[str, float]:
    out = {}
    for name in metrics:
        if name == "sensitivity":
            out[name] = tp / (tp + fn_)
        elif name == "specificity":
            out[name] = tn / (tn + fp)
        elif name == "accuracy":
            out[name] = (tp + tn) / (tp + fn_ + fp + tn)
        elif name == "f1":
            d = 2 * tp + fp + fn_
            out[name] = np.where(d > 0, 2 * tp / np.maximum(d, 1), 0.0)
    return out


def _check_metrics(metrics: Sequence[str], threshold: float | None):
    for name in metrics:
        if name not in METRIC_NAMES:
            raise ScreenEvalError(f"unknown metric {name!r}; expected one of {', '.join(METRIC_NAMES)}")
    if threshold is None and any(m != "auc" for m in metrics):
        raise ScreenEvalError("threshold metrics need a threshold")


def point_estimates(records: Sequence[PredictionRecord], metrics: Sequence[str], *,
                    threshold: float | None = None, level: str = "image",
                    strategy: VoteStrategy | str | None = None, mode: str = "ge") -> dict[str, float]:
    """Full-sample metric values, computed by the metrics module."""
    if level == "image":
        scored = [(r.score, r.label) for r in records]
    else:
        scored = scored_pairs(aggregate_dataset(group_records(records), VoteStrategy.parse(strategy)))
    out = {}
    if "auc" in metrics:
        out["auc"] = metric_value("auc", scored)
    rest = [m for m in metrics if m != "auc"]
    if rest:
        ms = metrics_from_confusion(confusion_at(scored, threshold, mode))
        out.update({m: ms.get(m) for m in rest})
    return out


@dataclass(frozen=True)
class BootstrapRequest:
    """One evaluation target over a shared record set."""
    threshold: float | None = None
    level: str = "image"
    strategy: VoteStrategy | str | None = None
    mode: str = "ge"


def bootstrap_many(records: Sequence[PredictionRecord], metrics: Sequence[str], cfg: BootstrapConfig,
                   requests: Sequence[BootstrapRequest]) -> list[dict[str, IntervalEstimate]]:
    """Intervals for several targets over the same records.

    Each replicate draws its resample once and evaluates every request on it,
    so the results are identical to separate :func:`bootstrap_metrics` calls
    with the same config, only cheaper.
    """
    metrics = list(dict.fromkeys(metrics))
    records = list(records)
    if not records:
        raise ScreenEvalError("no records to bootstrap")
    samples, points = [], []
    for req in requests:
        _check_metrics(metrics, req.threshold)
        check_mode(req.mode)
        if req.level not in ("image", "subject"):
            raise ConfigError(f"level must be image or subject, got {req.level!r}")
        strat = VoteStrategy.parse(req.strategy) if req.level == "subject" and req.strategy is not None else None
        if req.level == "subject" and strat is None:
            raise ConfigError("subject level needs a voting strategy")
        points.append(point_estimates(records, metrics, threshold=req.threshold, level=req.level,
                                      strategy=strat, mode=req.mode))
        samples.append(_Sample(records, req.level, strat, req.threshold, req.mode))

    values = [{m: [] for m in metrics} for _ in samples]
    excluded = [0] * len(samples)
    n = len(records)
    chunk = max(1, min(cfg.replicates, BATCH_CELLS // n))
    for first in range(0, cfg.replicates, chunk):
        reps = range(first, min(first + chunk, cfg.replicates))
        # record order inside _Sample depends only on the records, so one draw serves all
        W = samples[0].draw_weights(cfg.seed, reps, cfg.unit) if samples else None
        for j, sample in enumerate(samples):
            res = sample.evaluate_batch(W, cfg.unit, metrics)
            ok = ~np.isnan(res[metrics[0]])
            excluded[j] += int(ok.size - ok.sum())
            for m in metrics:
                values[j][m].append(res[m][ok])

    alpha = 1.0 - cfg.confidence
    out = []
    for pts, vals, ex in zip(points, values, excluded):
        if ex == cfg.replicates:
            raise ScreenEvalError("every bootstrap replicate lacked a class; metric undefined")
        if ex > EXCLUSION_WARNING * cfg.replicates:
            log.warning("%d of %d bootstrap replicates excluded (a class was absent)", ex, cfg.replicates)
        est = {}
        for m in metrics:
            lo, hi = np.quantile(np.concatenate(vals[m]), [alpha / 2, 1 - alpha / 2], method="linear")
            est[m] = IntervalEstimate(pts[m], float(lo), float(hi), ex)
        out.append(est)
    return out


def bootstrap_metrics(records: Sequence[PredictionRecord], metrics: Sequence[str], cfg: BootstrapConfig, *,
                      threshold: float | None = None, level: str = "image",
                      strategy: VoteStrategy | str | None = None, mode: str = "ge") -> dict[str, IntervalEstimate]:
    """Intervals for several metrics from one shared set of resamples.

    A replicate in which either class is absent is excluded (for every
    metric) and counted in ``excluded_replicates``.
    """
    return bootstrap_many(records, metrics, cfg, [BootstrapRequest(threshold, level, strategy, mode)])[0]


def bootstrap_ci(records: Sequence[PredictionRecord], metric: str, cfg: BootstrapConfig, *,
                 threshold: float | None = None, level: str = "image",
                 strategy: VoteStrategy | str | None = None, mode: str = "ge") -> IntervalEstimate:
    """Percentile bootstrap interval for one named metric."""
    return bootstrap_metrics(records, [metric], cfg, threshold=threshold, level=level,
                             strategy=strategy, mode=mode)[metric]
