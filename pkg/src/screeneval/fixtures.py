"""Construct score datasets that realize prescribed confusion counts.

Given, for each (cohort, class) stratum, the number of subjects and images
and how many of them must land on the positive side of a threshold at the
image level, under max-voting and under mean-voting, :func:`realize_counts`
builds concrete scores that hit all three counts simultaneously.  Useful for
golden tests where only published counts, not raw scores, are available.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from .dataset import Dataset, PredictionRecord, partition_and_group
from .errors import ScreenEvalError
from .metrics import confusion_at
from .voting import aggregate_dataset, scored_pairs


class FixtureError(ScreenEvalError):
    pass


@dataclass(frozen=True)
class StratumTarget:
    cohort: str
    label: int
    subjects: int
    images: int
    image_hits: int
    max_hits: int
    mean_hits: int
    split: str = "test"
    pinned: bool = False  # first subject scores exactly the threshold on every image

    def check(self):
        if self.subjects < 0 or self.images < self.subjects or (self.subjects == 0 and self.images):
            raise FixtureError(f"{self}: need images >= subjects >= 0")
        if not 0 <= self.mean_hits <= self.max_hits <= self.subjects:
            raise FixtureError(f"{self}: need 0 <= mean_hits <= max_hits <= subjects")
        if not self.max_hits <= self.image_hits <= self.images:
            raise FixtureError(f"{self}: need max_hits <= image_hits <= images")
        if self.pinned and self.mean_hits < 1:
            raise FixtureError(f"{self}: a pinned subject must be flagged under mean-voting")


def _distribute(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def _plan_hits(t: StratumTarget, sizes: list[int]) -> list[int]:
    """Number of flagged images per subject.

    Subjects [0, mean_hits) are flagged under both votes, [mean_hits, max_hits)
    only under max-voting (needs at least one unflagged image), the rest never.
    """
    hits = [1 if i < t.max_hits else 0 for i in range(t.subjects)]
    cap = [sizes[i] if i < t.mean_hits else (sizes[i] - 1 if i < t.max_hits else 0)
           for i in range(t.subjects)]
    if t.pinned:
        hits[0] = sizes[0]
    if any(h > c for h, c in zip(hits, cap)):
        raise FixtureError(f"{t}: a max-only subject has a single image and cannot stay below under mean")
    remaining = t.image_hits - sum(hits)
    while remaining > 0:
        progressed = False
        for i in range(t.subjects):
            if remaining and hits[i] < cap[i]:
                hits[i] += 1
                remaining -= 1
                progressed = True
        if not progressed:
            raise FixtureError(f"{t}: image_hits={t.image_hits} exceeds what the subject roles allow")
    if remaining < 0:
        raise FixtureError(f"{t}: image_hits={t.image_hits} is below max_hits plus pinned images")
    return hits


def _subject_scores(rng: random.Random, k: int, h: int, role: str, tau: float) -> list[float]:
    eps = 0.01 * (1.0 - tau)
    highs = [rng.uniform(tau + eps, 1.0) for _ in range(h)]
    lows = [rng.uniform(0.0, 0.99 * tau) for _ in range(k - h)]
    if role == "both" and lows:
        # lows must average at least `needed` for the mean to reach tau
        needed = (tau * k - sum(highs)) / (k - h)
        if needed >= 0.99 * tau:
            highs = [1.0] * h
            needed = (tau * k - h) / (k - h)
        if needed > 0:
            floor = (needed + 0.99 * tau) / 2
            lows = [max(x, floor) for x in lows]
    elif role == "max_only":
        needed = (tau * k - sum(highs)) / (k - h)
        if needed <= 0:
            bump = min(eps, 0.5 * tau * (k - h) / h)
            highs = [tau + bump * rng.uniform(0.5, 1.0) for _ in range(h)]
            needed = (tau * k - sum(highs)) / (k - h)
        lows = [min(x, 0.5 * needed) for x in lows]
    scores = highs + lows
    rng.shuffle(scores)
    return scores


def realize_stratum(t: StratumTarget, tau: float, rng: random.Random) -> list[PredictionRecord]:
    t.check()
    if t.subjects == 0:
        return []
    sizes = sorted(_distribute(t.images, t.subjects), reverse=True)
    hits = _plan_hits(t, sizes)
    tag = "P" if t.label == 1 else "N"
    out = []
    for i, (k, h) in enumerate(zip(sizes, hits)):
        if t.pinned and i == 0:
            scores = [tau] * k
        else:
            role = "both" if i < t.mean_hits else ("max_only" if i < t.max_hits else "none")
            scores = _subject_scores(rng, k, h, role, tau)
        sid = f"{t.cohort}-{t.split[:3]}-{tag}{i:04d}"
        out.extend(PredictionRecord(f"{sid}-{j + 1}", sid, t.cohort, t.split, t.label, s)
                   for j, s in enumerate(scores))
    return out


def realize_counts(targets: Sequence[StratumTarget], threshold: float = 0.5, seed: int = 0,
                   provenance: str = "realized fixture") -> Dataset:
    """Build a dataset meeting every stratum target at ``threshold`` (rule: score >= threshold)."""
    if not 0.0 < threshold < 1.0:
        raise FixtureError("threshold must lie strictly inside (0, 1)")
    rng = random.Random(seed)
    records: list[PredictionRecord] = []
    for t in targets:
        records.extend(realize_stratum(t, threshold, rng))
    d = Dataset(tuple(records), provenance)
    for t in targets:
        _verify(d, t, threshold)
    return d


def _verify(d: Dataset, t: StratumTarget, tau: float):
    recs = [r for r in d.records if r.cohort == t.cohort and r.split == t.split and r.label == t.label]
    if not recs:
        return
    got = confusion_at([(r.score, r.label) for r in recs], tau)
    groups = [g for g in partition_and_group(d, t.split, t.cohort) if g.label == t.label]
    flagged = {}
    for strategy in ("max", "mean"):
        cm = confusion_at(scored_pairs(aggregate_dataset(groups, strategy)), tau)
        flagged[strategy] = cm.tp + cm.fp
    realized = (got.tp + got.fp, flagged["max"], flagged["mean"])
    if realized != (t.image_hits, t.max_hits, t.mean_hits):
        raise FixtureError(f"{t}: realized (image, max, mean) hits {realized}")
