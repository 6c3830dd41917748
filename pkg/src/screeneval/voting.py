"""Subject-level score aggregation (max- and mean-voting)."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

from .dataset import SubjectGroup
from .errors import ScreenEvalError


class VoteStrategy(str, enum.Enum):
    MAX = "max"
    MEAN = "mean"

    @classmethod
    def parse(cls, value: VoteStrategy | str) -> VoteStrategy:
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"max": cls.MAX, "max_voting": cls.MAX, "mean": cls.MEAN, "mean_voting": cls.MEAN}
        if key not in aliases:
            raise ScreenEvalError(f"unknown strategy {value!r}; expected 'max' or 'mean'")
        return aliases[key]

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SubjectScore:
    subject_id: str
    label: int
    cohort: str
    strategy: VoteStrategy
    score: float


def _mean(scores: Sequence[float]) -> float:
    lo, hi = min(scores), max(scores)
    if lo == hi:
        return hi
    m = math.fsum(scores) / len(scores)
    # rounding must not let the mean reach the maximum when the scores differ;
    # if min and max are adjacent floats nothing lies between, so min is returned
    if m >= hi:
        m = math.nextafter(hi, -math.inf)
    elif m < lo:
        m = lo
    return m


def vote(scores: Sequence[float], strategy: VoteStrategy | str) -> float:
    """Collapse one subject's image scores into a single score.

    >>> vote([0.2, 0.9, 0.4], "max")
    0.9
    >>> vote([0.2, 0.9, 0.4], "mean")
    0.5
    """
    strategy = VoteStrategy.parse(strategy)
    if len(scores) == 0:
        raise ScreenEvalError("no scores for subject")
    if strategy is VoteStrategy.MAX:
        return float(max(scores))
    return float(_mean(scores))


def aggregate_dataset(groups: Sequence[SubjectGroup], strategy: VoteStrategy | str) -> list[SubjectScore]:
    strategy = VoteStrategy.parse(strategy)
    return [
        SubjectScore(g.subject_id, g.label, g.cohort, strategy, vote(g.values, strategy))
        for g in groups
    ]


def scored_pairs(subjects: Sequence[SubjectScore]) -> list[tuple[float, int]]:
    return [(s.score, s.label) for s in subjects]
