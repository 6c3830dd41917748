"""Decision-threshold selection on the validation split (best F1)."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dataset import Dataset, partition_and_group
from .errors import ConfigError, DatasetError, UndefinedMetricError
from .metrics import ConfusionMatrix, as_arrays, check_mode, class_counts_by_score
from .voting import VoteStrategy, aggregate_dataset, scored_pairs

LEVELS = ("image", "subject")


@dataclass(frozen=True)
class CalibrationArtifact:
    threshold: float
    achieved_f1: float
    level: str
    strategy: VoteStrategy | None
    validation_counts: ConfusionMatrix
    created_from: str
    threshold_mode: str = "ge"

    @property
    def key(self) -> tuple[str, str | None]:
        return (self.level, self.strategy.value if self.strategy else None)

    @property
    def label(self) -> str:
        return "image" if self.level == "image" else f"subject/{self.strategy.value}"

    def decide(self, score: float) -> bool:
        if self.threshold_mode == "gt":
            return score > self.threshold
        return score >= self.threshold

    def as_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "achieved_f1": self.achieved_f1,
            "level": self.level,
            "strategy": self.strategy.value if self.strategy else None,
            "validation_counts": self.validation_counts.as_dict(),
            "created_from": self.created_from,
            "threshold_mode": self.threshold_mode,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> CalibrationArtifact:
        try:
            level = d["level"]
            if level not in LEVELS:
                raise ConfigError(f"artifact level must be image or subject, got {level!r}")
            strategy = VoteStrategy.parse(d["strategy"]) if d.get("strategy") is not None else None
            if (level == "subject") != (strategy is not None):
                raise ConfigError("artifact strategy is required for subject level and only there")
            return cls(
                threshold=float(d["threshold"]),
                achieved_f1=float(d["achieved_f1"]),
                level=level,
                strategy=strategy,
                validation_counts=ConfusionMatrix.from_dict(d["validation_counts"]),
                created_from=str(d.get("created_from", "")),
                threshold_mode=check_mode(d.get("threshold_mode", "ge")),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed calibration artifact: {exc}") from None


def best_f1_threshold(scored, mode: str = "ge") -> tuple[float, float, ConfusionMatrix]:
    """Exhaustive search for the F1-maximising threshold.

    Candidates are the distinct observed scores plus one sentinel: just above
    the maximum for mode "ge" (flags nothing), just below the minimum for
    "gt" (flags everything).  Ties in F1 go to the largest threshold.
    """
    check_mode(mode)
    scores, labels = as_arrays(scored)
    distinct, pos, neg = class_counts_by_score(scores, labels)
    n_pos, n_neg = int(pos.sum()), int(neg.sum())
    if n_pos == 0:
        raise UndefinedMetricError("f1", "no positive records")
    if n_neg == 0:
        raise UndefinedMetricError("f1", "no negative records")

    # candidates in descending order; the i-th flags the top i distinct scores
    if mode == "ge":
        thresholds = np.concatenate(([math.nextafter(float(distinct[-1]), math.inf)], distinct[::-1]))
    else:
        thresholds = np.concatenate((distinct[::-1], [math.nextafter(float(distinct[0]), -math.inf)]))
    tp = np.concatenate(([0], np.cumsum(pos[::-1])))
    fp = np.concatenate(([0], np.cumsum(neg[::-1])))
    fn_ = n_pos - tp
    denom = 2 * tp + fp + fn_
    f1 = np.where(denom > 0, 2 * tp / np.maximum(denom, 1), 0.0)
    best = int(np.argmax(f1))  # first maximum == largest threshold
    cm = ConfusionMatrix(int(tp[best]), int(fn_[best]), int(fp[best]), n_neg - int(fp[best]))
    return float(thresholds[best]), float(f1[best]), cm


def calibrate(d: Dataset, level: str, strategy: VoteStrategy | str | None = None,
              mode: str = "ge") -> CalibrationArtifact:
    """Freeze the best-F1 threshold found on the validation split of ``d``."""
    if level not in LEVELS:
        raise ConfigError(f"level must be image or subject, got {level!r}")
    if level == "subject" and strategy is None:
        raise ConfigError("subject-level calibration needs a voting strategy")
    if level == "image" and strategy is not None:
        raise ConfigError("image-level calibration takes no voting strategy")
    val = d.filter(split="validation")
    if not val.records:
        raise DatasetError("dataset has no validation split")
    if level == "image":
        scored = [(r.score, r.label) for r in val.records]
        strat = None
    else:
        strat = VoteStrategy.parse(strategy)
        scored = scored_pairs(aggregate_dataset(partition_and_group(val), strat))
    thr, f1, cm = best_f1_threshold(scored, mode)
    return CalibrationArtifact(thr, f1, level, strat, cm, d.provenance, mode)


def default_combinations() -> list[tuple[str, VoteStrategy | None]]:
    return [("image", None), ("subject", VoteStrategy.MAX), ("subject", VoteStrategy.MEAN)]


def calibrate_all(d: Dataset, mode: str = "ge") -> list[CalibrationArtifact]:
    return [calibrate(d, level, strat, mode) for level, strat in default_combinations()]


class ArtifactSet:
    """Calibration artifacts indexed by (level, strategy)."""

    def __init__(self, artifacts: Iterable[CalibrationArtifact] = ()):
        self._by_key: dict[tuple[str, str | None], CalibrationArtifact] = {}
        for a in artifacts:
            if a.key in self._by_key:
                raise ConfigError(f"duplicate calibration artifact for {a.label}")
            self._by_key[a.key] = a

    def get(self, level: str, strategy: VoteStrategy | str | None = None) -> CalibrationArtifact | None:
        strat = VoteStrategy.parse(strategy).value if strategy is not None else None
        return self._by_key.get((level, strat))

    def require(self, level: str, strategy: VoteStrategy | str | None = None) -> CalibrationArtifact:
        a = self.get(level, strategy)
        if a is None:
            name = level if strategy is None else f"{level}/{VoteStrategy.parse(strategy).value}"
            raise ConfigError(f"no calibration artifact loaded for {name}")
        return a

    def __iter__(self):
        order = {k: i for i, k in enumerate((l, s.value if s else None) for l, s in default_combinations())}
        return iter(sorted(self._by_key.values(), key=lambda a: order.get(a.key, 99)))

    def __len__(self) -> int:
        return len(self._by_key)

    def __contains__(self, key) -> bool:
        return key in self._by_key

    def as_list(self) -> list[dict]:
        return [a.as_dict() for a in self]


def artifacts_from_document(doc) -> list[CalibrationArtifact]:
    if isinstance(doc, dict):
        doc = [doc]
    if not isinstance(doc, list):
        raise ConfigError("artifact document must be an object or an array of objects")
    return [CalibrationArtifact.from_dict(x) for x in doc]


def load_artifacts(paths: Sequence[str | Path]) -> ArtifactSet:
    arts: list[CalibrationArtifact] = []
    for p in paths:
        try:
            with open(p, encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: invalid JSON ({exc.msg})") from None
        arts.extend(artifacts_from_document(doc))
    return ArtifactSet(arts)


def dump_artifacts(artifacts: Sequence[CalibrationArtifact]) -> str:
    if len(artifacts) == 1:
        return artifacts[0].to_json()
    return json.dumps([a.as_dict() for a in artifacts], indent=2) + "\n"
