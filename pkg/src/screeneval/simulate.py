"""Synthetic multi-cohort, multi-image score datasets with known separability.

Each subject draws a latent score from its class's Gaussian; each of its
images mixes that latent with a fresh draw from the same Gaussian::

    score = clamp(subject_effect * latent + (1 - subject_effect) * fresh, 0, 1)

Random streams derive from ``(seed, subject index)``, so the output does not
depend on generation order.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset, PredictionRecord
from .errors import ConfigError

SPLIT_NAMES = ("train", "validation", "test")
# per-stratum split shuffles use a stream disjoint from subject streams
_SPLIT_STREAM = 2**32


@dataclass(frozen=True)
class ClassModel:
    mean: float
    std: float

    def __post_init__(self):
        if not math.isfinite(self.mean) or not math.isfinite(self.std) or self.std < 0:
            raise ConfigError(f"class model needs finite mean and std >= 0, got {self.mean}, {self.std}")


@dataclass(frozen=True)
class SimConfig:
    subjects_per_cohort: dict[str, tuple[int, int]]  # cohort -> (positive, negative)
    images_per_subject: tuple[int, int] = (3, 5)
    positive: ClassModel = ClassModel(0.7, 0.2)
    negative: ClassModel = ClassModel(0.3, 0.2)
    subject_effect: float = 0.5
    split_fractions: tuple[float, float, float] = (0.0, 0.0, 1.0)
    seed: int = 0
    provenance: str = field(default="", compare=False)

    def __post_init__(self):
        for cohort, counts in self.subjects_per_cohort.items():
            if len(counts) != 2 or any(int(c) != c or c < 0 for c in counts):
                raise ConfigError(f"cohort {cohort!r}: counts must be two non-negative integers")
        lo, hi = self.images_per_subject
        if lo < 1 or lo > hi:
            raise ConfigError(f"images_per_subject must satisfy 1 <= lo <= hi, got {lo}, {hi}")
        if not 0.0 <= self.subject_effect <= 1.0:
            raise ConfigError(f"subject_effect must lie in [0, 1], got {self.subject_effect}")
        fr = self.split_fractions
        if len(fr) != 3 or any(f < 0 for f in fr) or not math.isclose(sum(fr), 1.0, abs_tol=1e-9):
            raise ConfigError(f"split_fractions must be three non-negative numbers summing to 1, got {fr}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")

    @property
    def total_subjects(self) -> int:
        return sum(p + n for p, n in self.subjects_per_cohort.values())

    def with_seed(self, seed: int) -> SimConfig:
        return SimConfig(self.subjects_per_cohort, self.images_per_subject, self.positive, self.negative,
                         self.subject_effect, self.split_fractions, seed, self.provenance)

    @classmethod
    def from_dict(cls, d: dict) -> SimConfig:
        try:
            cohorts = {str(k): (int(v[0]), int(v[1])) for k, v in d["subjects_per_cohort"].items()}
            fr = d.get("split_fractions", (0.0, 0.0, 1.0))
            if isinstance(fr, dict):
                fr = tuple(float(fr.get(k, 0.0)) for k in SPLIT_NAMES)
            kwargs = dict(
                subjects_per_cohort=cohorts,
                images_per_subject=tuple(int(x) for x in d.get("images_per_subject", (3, 5))),
                subject_effect=float(d.get("subject_effect", 0.5)),
                split_fractions=tuple(float(x) for x in fr),
                seed=int(d.get("seed", 0)),
            )
            for key in ("positive", "negative"):
                if key in d:
                    kwargs[key] = ClassModel(float(d[key]["mean"]), float(d[key]["std"]))
        except (KeyError, TypeError, ValueError, IndexError, AttributeError) as exc:
            raise ConfigError(f"malformed simulation config: {exc!r}") from None
        return cls(**kwargs)

    def as_dict(self) -> dict:
        return {
            "subjects_per_cohort": {k: list(v) for k, v in self.subjects_per_cohort.items()},
            "images_per_subject": list(self.images_per_subject),
            "positive": {"mean": self.positive.mean, "std": self.positive.std},
            "negative": {"mean": self.negative.mean, "std": self.negative.std},
            "subject_effect": self.subject_effect,
            "split_fractions": list(self.split_fractions),
            "seed": self.seed,
        }


def load_config(path: str | Path) -> SimConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from None
    return SimConfig.from_dict(doc)


def _allocate(n: int, fractions) -> list[int]:
    """Largest-remainder split of n items into len(fractions) exact counts."""
    raw = [f * n for f in fractions]
    counts = [math.floor(x) for x in raw]
    rest = n - sum(counts)
    by_remainder = sorted(range(len(raw)), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in by_remainder[:rest]:
        counts[i] += 1
    return counts


def simulate_cohort(cfg: SimConfig) -> Dataset:
    """Generate a dataset; a pure function of ``cfg`` (seed included)."""
    if cfg.total_subjects == 0:
        raise ConfigError("simulation config has zero subjects")
    lo, hi = cfg.images_per_subject
    se = cfg.subject_effect
    records: list[PredictionRecord] = []
    index = 0
    for c_idx, (cohort, (n_pos, n_neg)) in enumerate(cfg.subjects_per_cohort.items()):
        for label, n, model in ((1, n_pos, cfg.positive), (0, n_neg, cfg.negative)):
            # subject-wise split assignment, stratified by cohort and class
            split_rng = np.random.default_rng([cfg.seed, _SPLIT_STREAM, c_idx, label])
            counts = _allocate(n, cfg.split_fractions)
            splits = np.repeat(np.arange(3), counts)
            split_rng.shuffle(splits)
            for k in range(n):
                rng = np.random.default_rng([cfg.seed, index])
                sid = f"{cohort}-{'P' if label else 'N'}{k:05d}"
                latent = rng.normal(model.mean, model.std)
                n_img = int(rng.integers(lo, hi + 1))
                fresh = rng.normal(model.mean, model.std, size=n_img)
                scores = np.clip(se * latent + (1.0 - se) * fresh, 0.0, 1.0)
                split = SPLIT_NAMES[int(splits[k])]
                for j, s in enumerate(scores):
                    records.append(PredictionRecord(f"{sid}-{j + 1}", sid, cohort, split, label, float(s)))
                index += 1
    return Dataset(tuple(records), cfg.provenance or f"simulate(seed={cfg.seed})")


def _std_normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def clamp_error_bound(cfg: SimConfig) -> float:
    """Upper bound on how far clamping to [0, 1] can move the image-level AUC.

    Clamping is monotone, so it only changes a positive/negative comparison
    when both scores fall beyond the same bound (they then tie at 1/2).
    """
    c = math.sqrt(cfg.subject_effect ** 2 + (1 - cfg.subject_effect) ** 2)

    def tails(m: ClassModel) -> tuple[float, float]:
        sd = m.std * c
        if sd == 0.0:
            return float(m.mean < 0.0), float(m.mean > 1.0)
        return _std_normal_cdf((0.0 - m.mean) / sd), _std_normal_cdf((m.mean - 1.0) / sd)

    p_lo, p_hi = tails(cfg.positive)
    n_lo, n_hi = tails(cfg.negative)
    return 0.5 * (p_lo * n_lo + p_hi * n_hi)


def theoretical_auc(cfg: SimConfig, tolerance: float = 1e-3) -> float:
    """Closed-form image-level AUC of the Gaussian score model.

    With ``subject_effect`` s an image score is s*L + (1-s)*F for independent
    class draws L, F, so its marginal is Gaussian with the class mean and the
    class variance scaled by c = s**2 + (1-s)**2 (c = 1 at s = 0).  A positive
    and a negative image always come from different subjects, hence

        AUC = Phi((mu_pos - mu_neg) / sqrt(c * (var_pos + var_neg)))

    Raises ``ConfigError("oracle inapplicable ...")`` when clamping could move
    the value by more than ``tolerance``.
    """
    bound = clamp_error_bound(cfg)
    if bound > tolerance:
        raise ConfigError(f"oracle inapplicable: clamping may shift AUC by up to {bound:.4g}")
    dmu = cfg.positive.mean - cfg.negative.mean
    s = cfg.subject_effect
    var = (s * s + (1 - s) ** 2) * (cfg.positive.std ** 2 + cfg.negative.std ** 2)
    if var == 0.0:
        return 0.5 if dmu == 0 else (1.0 if dmu > 0 else 0.0)
    return _std_normal_cdf(dmu / math.sqrt(var))
