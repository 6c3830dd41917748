"""Performance tables, confusion tables and ROC exports, stratified by cohort.

JSON is the canonical encoding; text tables and the CSV/SVG exports derive
from the same objects.  All outputs are byte-stable for fixed inputs and seed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

from .bootstrap import BootstrapConfig, BootstrapRequest, IntervalEstimate, bootstrap_many, point_estimates
from .calibration import ArtifactSet, CalibrationArtifact
from .dataset import Dataset, PredictionRecord, group_records
from .errors import ScreenEvalError, UndefinedMetricError
from .metrics import METRIC_NAMES, ConfusionMatrix, RocCurve, confusion_at, roc_points
from .voting import VoteStrategy, aggregate_dataset, scored_pairs

TOTAL = "Total"


def scored_for(records: Sequence[PredictionRecord], level: str,
               strategy: VoteStrategy | str | None = None) -> list[tuple[float, int]]:
    """(score, label) pairs at image level, or per subject after voting."""
    if level == "image":
        return [(r.score, r.label) for r in records]
    if strategy is None:
        raise ScreenEvalError("subject level needs a voting strategy")
    return scored_pairs(aggregate_dataset(group_records(records), strategy))


def _scopes(d: Dataset) -> list[tuple[str, tuple[PredictionRecord, ...]]]:
    out = [(c, d.filter(cohort=c).records) for c in d.cohorts()]
    out.append((TOTAL, d.records))
    return out


def _select_split(d: Dataset, split: str | None) -> Dataset:
    if split is None:
        return d
    sub = d.filter(split=split)
    if not sub.records:
        raise ScreenEvalError(f"dataset has no records in split {split!r}")
    return sub


def _mode_of(a: CalibrationArtifact, override: str | None) -> str:
    return override or a.threshold_mode


@dataclass(frozen=True)
class PerformanceRow:
    scope: str
    level: str
    strategy: str | None
    threshold: float
    n_units: int
    counts: ConfusionMatrix | None
    metrics: dict[str, IntervalEstimate] | None
    notice: str | None = None

    @property
    def computable(self) -> bool:
        return self.metrics is not None

    def as_dict(self) -> dict:
        return {
            "scope": self.scope,
            "level": self.level,
            "strategy": self.strategy,
            "threshold": self.threshold,
            "n": self.n_units,
            "status": "ok" if self.computable else "not computable",
            "counts": self.counts.as_dict() if self.counts else None,
            "metrics": {k: v.as_dict() for k, v in self.metrics.items()} if self.metrics else None,
            "notice": self.notice,
        }


@dataclass(frozen=True)
class PerformanceReport:
    rows: tuple[PerformanceRow, ...]
    thresholds: dict[str, dict]
    bootstrap: BootstrapConfig
    provenance: str
    notices: tuple[str, ...] = field(default_factory=tuple)

    def row(self, scope: str, level: str, strategy: str | None = None) -> PerformanceRow:
        for r in self.rows:
            if r.scope == scope and r.level == level and r.strategy == strategy:
                return r
        raise KeyError((scope, level, strategy))

    def as_dict(self) -> dict:
        return {
            "rows": [r.as_dict() for r in self.rows],
            "thresholds": self.thresholds,
            "bootstrap": {
                "replicates": self.bootstrap.replicates,
                "confidence": self.bootstrap.confidence,
                "seed": self.bootstrap.seed,
                "unit": self.bootstrap.unit,
            },
            "provenance": self.provenance,
            "notices": list(self.notices),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2) + "\n"

    def render(self) -> str:
        head = ["Scope", "Level", "AUC(95% CI)", "Sensitivity(95% CI)", "Specificity(95% CI)",
                "ACC(95% CI)", "F1(95% CI)"]
        lines = []
        for r in self.rows:
            level = "image" if r.level == "image" else f"subject ({r.strategy})"
            if r.metrics is None:
                cells = [r.scope, level, "not computable"] + [""] * 4
            else:
                cells = [r.scope, level] + [r.metrics[m].render() for m in METRIC_NAMES]
            lines.append(cells)
        widths = [max(len(str(x)) for x in col) for col in zip(head, *lines)]
        fmt = "  ".join(f"{{:<{w}}}" for w in widths)
        out = [fmt.format(*head)] + [fmt.format(*cells) for cells in lines]
        out.extend(f"note: {n}" for n in self.notices)
        return "\n".join(x.rstrip() for x in out) + "\n"


def _artifact_list(artifacts: ArtifactSet | Sequence[CalibrationArtifact]) -> list[CalibrationArtifact]:
    arts = list(artifacts if isinstance(artifacts, ArtifactSet) else ArtifactSet(artifacts))
    if not arts:
        raise ScreenEvalError("no calibration artifacts supplied")
    return arts


def _estimates_where_defined(recs, cfg: BootstrapConfig, requests: list[BootstrapRequest]) -> list:
    """Bootstrap the computable requests; undefined ones yield their error instead."""
    out: list = []
    ok = []
    for req in requests:
        try:
            point_estimates(recs, METRIC_NAMES, threshold=req.threshold, level=req.level,
                            strategy=req.strategy, mode=req.mode)
            out.append(None)
            ok.append(req)
        except UndefinedMetricError as exc:
            out.append(exc)
    estimates = iter(bootstrap_many(recs, METRIC_NAMES, cfg, ok) if ok else [])
    return [next(estimates) if x is None else x for x in out]


def build_performance_report(test: Dataset, artifacts: ArtifactSet | Sequence[CalibrationArtifact],
                             cfg: BootstrapConfig = BootstrapConfig(), *, split: str | None = "test",
                             mode: str | None = None) -> PerformanceReport:
    """One row per (scope, level, strategy): AUC from scores, other metrics at
    the calibrated threshold, each with a bootstrap interval."""
    arts = _artifact_list(artifacts)
    d = _select_split(test, split)
    rows, notices = [], []
    for scope, recs in _scopes(d):
        requests = [BootstrapRequest(a.threshold, a.level, a.strategy, _mode_of(a, mode)) for a in arts]
        try:
            # all rows of a scope share one set of resamples
            estimates = bootstrap_many(recs, METRIC_NAMES, cfg, requests)
        except UndefinedMetricError:
            estimates = _estimates_where_defined(recs, cfg, requests)
        for a, req, est in zip(arts, requests, estimates):
            scored = scored_for(recs, a.level, a.strategy)
            counts = confusion_at(scored, a.threshold, req.mode)
            note = None
            if isinstance(est, UndefinedMetricError):
                note = f"{scope} {a.label}: not computable ({est})"
                notices.append(note)
                est = None
            strat = a.strategy.value if a.strategy else None
            rows.append(PerformanceRow(scope, a.level, strat, a.threshold, len(scored), counts, est, note))
    thresholds = {a.label: {"threshold": a.threshold, "threshold_mode": _mode_of(a, mode),
                            "achieved_f1": a.achieved_f1, "created_from": a.created_from} for a in arts}
    return PerformanceReport(tuple(rows), thresholds, cfg, d.provenance, tuple(notices))


# --------------------------------------------------------------------------
# confusion tables


def _pct(num: int, den: int) -> float | None:
    return round(100.0 * num / den, 1) if den else None


def fmt_pct(x: float | None) -> str:
    if x is None:
        return "-"
    s = f"{x:.1f}"
    return s[:-2] if s.endswith(".0") else s


@dataclass(frozen=True)
class ConfusionRow:
    scope: str
    level: str
    strategy: str | None
    counts: ConfusionMatrix

    @property
    def positive_pct(self) -> tuple[float | None, float | None]:
        c = self.counts
        return _pct(c.tp, c.positives), _pct(c.fn_, c.positives)

    @property
    def negative_pct(self) -> tuple[float | None, float | None]:
        c = self.counts
        return _pct(c.fp, c.negatives), _pct(c.tn, c.negatives)

    def as_dict(self) -> dict:
        p, n = self.positive_pct, self.negative_pct
        return {
            "scope": self.scope,
            "level": self.level,
            "strategy": self.strategy,
            "counts": self.counts.as_dict(),
            "P": {"P": self.counts.tp, "N": self.counts.fn_, "P%": p[0], "N%": p[1]},
            "N": {"P": self.counts.fp, "N": self.counts.tn, "P%": n[0], "N%": n[1]},
        }


@dataclass(frozen=True)
class ConfusionReport:
    rows: tuple[ConfusionRow, ...]
    provenance: str
    notices: tuple[str, ...] = ()

    def row(self, scope: str, level: str, strategy: str | None = None) -> ConfusionRow:
        for r in self.rows:
            if r.scope == scope and r.level == level and r.strategy == strategy:
                return r
        raise KeyError((scope, level, strategy))

    def as_dict(self) -> dict:
        return {"rows": [r.as_dict() for r in self.rows], "provenance": self.provenance,
                "notices": list(self.notices)}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2) + "\n"

    def render(self) -> str:
        out = []
        for r in self.rows:
            c = r.counts
            name = "image" if r.level == "image" else f"subject({r.strategy})"
            p, n = r.positive_pct, r.negative_pct
            out.append(f"{r.scope:<10} {name:<14} P | {c.tp} | {c.fn_} | {fmt_pct(p[0])} | {fmt_pct(p[1])}")
            out.append(f"{'':<10} {'':<14} N | {c.fp} | {c.tn} | {fmt_pct(n[0])} | {fmt_pct(n[1])}")
        out.extend(f"note: {x}" for x in self.notices)
        return "\n".join(x.rstrip() for x in out) + "\n"


def build_confusion_report(test: Dataset, artifacts: ArtifactSet | Sequence[CalibrationArtifact], *,
                           split: str | None = "test", mode: str | None = None,
                           cohorts: Sequence[str] | None = None) -> ConfusionReport:
    """Counts and class-normalised percentages (one decimal) per scope and level.

    ``cohorts`` lists scopes to report; a listed cohort without records is
    omitted with a notice.
    """
    arts = _artifact_list(artifacts)
    d = _select_split(test, split)
    scopes = _scopes(d)
    notices = []
    if cohorts is not None:
        present = dict(scopes)
        scopes = []
        for c in list(cohorts) + [TOTAL]:
            if present.get(c):
                scopes.append((c, present[c]))
            else:
                notices.append(f"{c}: no records; row omitted")
    rows = []
    for scope, recs in scopes:
        for a in arts:
            scored = scored_for(recs, a.level, a.strategy)
            cm = confusion_at(scored, a.threshold, _mode_of(a, mode))
            if cm.positives == 0 or cm.negatives == 0:
                notices.append(f"{scope} {a.label}: single class present; percentages partly undefined")
            rows.append(ConfusionRow(scope, a.level, a.strategy.value if a.strategy else None, cm))
    return ConfusionReport(tuple(rows), d.provenance, tuple(notices))


# --------------------------------------------------------------------------
# ROC export

SVG_SIZE = 480
PLOT_MARGIN = 60
PLOT_SIDE = SVG_SIZE - 2 * PLOT_MARGIN


def plot_coords(fpr: float, tpr: float) -> tuple[float, float]:
    """Map a unit-square ROC point to SVG pixel coordinates (y axis points down)."""
    return PLOT_MARGIN + fpr * PLOT_SIDE, PLOT_MARGIN + (1.0 - tpr) * PLOT_SIDE


def _xy(fpr: float, tpr: float) -> str:
    x, y = plot_coords(fpr, tpr)
    return f"{x:.2f},{y:.2f}"


def render_roc_svg(curve: RocCurve, title: str = "ROC") -> str:
    m, side, size = PLOT_MARGIN, PLOT_SIDE, SVG_SIZE
    pts = " ".join(_xy(fpr, tpr) for _, fpr, tpr in curve.points)
    (x0, y0), (x1, y1) = plot_coords(0.0, 0.0), plot_coords(1.0, 1.0)
    ticks = []
    for v in (0.0, 0.25, 0.5, 0.75, 1.0):
        x, _ = plot_coords(v, 0.0)
        _, y = plot_coords(0.0, v)
        ticks.append(f'  <text x="{x:.2f}" y="{m + side + 18}" text-anchor="middle" font-size="11">{v:g}</text>')
        ticks.append(f'  <text x="{m - 8}" y="{y + 4:.2f}" text-anchor="end" font-size="11">{v:g}</text>')
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'  <rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
        f'  <text x="{size / 2:g}" y="{m / 2:g}" text-anchor="middle" font-size="14">{_escape(title)}</text>',
        f'  <rect x="{m}" y="{m}" width="{side}" height="{side}" fill="none" stroke="black"/>',
        f'  <line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" stroke="gray" stroke-dasharray="4 4"/>',
        f'  <polyline class="roc" points="{pts}" fill="none" stroke="#1f77b4" stroke-width="2"/>',
        *ticks,
        f'  <text x="{m + side / 2:g}" y="{size - 15}" text-anchor="middle" font-size="12">False positive rate</text>',
        f'  <text x="15" y="{m + side / 2:g}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 15 {m + side / 2:g})">True positive rate</text>',
        f'  <text class="auc" x="{m + side - 10}" y="{m + side - 12}" text-anchor="end" '
        f'font-size="13">AUC = {curve.auc:.3f}</text>',
        "</svg>",
    ]
    return "\n".join(lines) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def export_roc(test: Dataset, level: str = "image", strategy: VoteStrategy | str | None = None, *,
               split: str | None = "test", cohort: str | None = None) -> tuple[str, str]:
    """ROC curve of a slice as (CSV text, SVG text)."""
    d = _select_split(test, split)
    if cohort is not None:
        d = d.filter(cohort=cohort)
    curve = roc_points(scored_for(d.records, level, strategy))
    scope = cohort or TOTAL
    name = "image level" if level == "image" else f"subject level, {VoteStrategy.parse(strategy).value}-voting"
    return curve.to_csv(), render_roc_svg(curve, f"{scope}: {name}")
