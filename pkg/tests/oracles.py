"""Independent reference implementations used only by the tests.

They are deliberately naive (quadratic loops, plain Python) so they share no
code paths with the vectorized library implementations.
"""
from __future__ import annotations

from statistics import NormalDist


def pairwise_auc(scored) -> float:
    pos = [s for s, y in scored if y == 1]
    neg = [s for s, y in scored if y == 0]
    wins = 0.0
    for p in pos:
        for n in neg:
            wins += 1.0 if p > n else (0.5 if p == n else 0.0)
    return wins / (len(pos) * len(neg))


def f1_at(scored, tau, strict=False) -> float:
    tp = fp = fn = 0
    for s, y in scored:
        flagged = s > tau if strict else s >= tau
        if flagged and y == 1:
            tp += 1
        elif flagged:
            fp += 1
        elif y == 1:
            fn += 1
    return 0.0 if tp == 0 else 2 * tp / (2 * tp + fp + fn)


def rescan_best_f1(scored, strict=False) -> float:
    """Max F1 over every observed score plus thresholds flagging nothing or everything."""
    values = sorted({s for s, _ in scored})
    candidates = values + [values[-1] + 1.0, values[0] - 1.0]
    return max(f1_at(scored, t, strict) for t in candidates)


def gaussian_auc(mu_pos, mu_neg, sd_pos, sd_neg, subject_effect=0.0) -> float:
    c = subject_effect ** 2 + (1 - subject_effect) ** 2
    spread = (c * (sd_pos ** 2 + sd_neg ** 2)) ** 0.5
    return NormalDist().cdf((mu_pos - mu_neg) / spread)
