"""Prediction records: data model, parsing, validation and subject grouping.

A record is one photograph's classifier score together with the identity of
the subject it belongs to, the subject's label, recruitment cohort and data
split.  Everything downstream (voting, metrics, calibration, reports) is a
function of these records.
"""
from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DatasetError

FIELDS = ("image_id", "subject_id", "cohort", "split", "label", "score")
SPLITS = ("train", "validation", "test")


@dataclass(frozen=True)
class PredictionRecord:
    image_id: str
    subject_id: str
    cohort: str
    split: str
    label: int
    score: float

    def as_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "subject_id": self.subject_id,
            "cohort": self.cohort,
            "split": self.split,
            "label": self.label,
            "score": self.score,
        }


@dataclass(frozen=True)
class Dataset:
    records: tuple[PredictionRecord, ...]
    provenance: str = ""

    def __post_init__(self):
        if not isinstance(self.records, tuple):
            object.__setattr__(self, "records", tuple(self.records))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def filter(self, split: str | None = None, cohort: str | None = None) -> Dataset:
        recs = tuple(
            r
            for r in self.records
            if (split is None or r.split == split) and (cohort is None or r.cohort == cohort)
        )
        parts = [p for p in (f"split={split}" if split else "", f"cohort={cohort}" if cohort else "") if p]
        prov = self.provenance if not parts else f"{self.provenance} [{', '.join(parts)}]"
        return Dataset(recs, prov)

    def cohorts(self) -> list[str]:
        """Cohort names in order of first appearance."""
        return list(dict.fromkeys(r.cohort for r in self.records))

    def splits(self) -> set[str]:
        return {r.split for r in self.records}


@dataclass(frozen=True)
class SubjectGroup:
    subject_id: str
    label: int
    cohort: str
    split: str
    scores: tuple[tuple[str, float], ...]

    def __len__(self) -> int:
        return len(self.scores)

    @property
    def values(self) -> list[float]:
        return [s for _, s in self.scores]


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    image_id: str | None = None
    subject_id: str | None = None

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "message": self.message,
            "image_id": self.image_id,
            "subject_id": self.subject_id,
        }


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __len__(self) -> int:
        return len(self.violations)

    def as_dict(self) -> dict:
        return {"ok": self.ok, "violations": [v.as_dict() for v in self.violations]}

    def render(self) -> str:
        lines = [f"{len(self.violations)} violations"]
        lines.extend(f"  {v.kind}: {v.message}" for v in self.violations)
        return "\n".join(lines)


# --------------------------------------------------------------------------
# parsing


def _parse_label(raw, where: str) -> int:
    if isinstance(raw, bool):
        raise DatasetError(f"{where}: field 'label' must be 0 or 1, got {raw!r}")
    if isinstance(raw, int) and raw in (0, 1):
        return raw
    if isinstance(raw, str) and raw.strip() in ("0", "1"):
        return int(raw.strip())
    raise DatasetError(f"{where}: field 'label' must be 0 or 1, got {raw!r}")


def _parse_score(raw, where: str) -> float:
    if isinstance(raw, bool):
        raise DatasetError(f"{where}: field 'score' is not a real number: {raw!r}")
    if isinstance(raw, (int, float)):
        return float(raw)
    if isinstance(raw, str):
        try:
            return float(raw.strip())
        except ValueError:
            pass
    raise DatasetError(f"{where}: field 'score' is not a real number: {raw!r}")


def _parse_split(raw, where: str) -> str:
    if not isinstance(raw, str) or raw.strip() not in SPLITS:
        raise DatasetError(f"{where}: field 'split' must be one of {', '.join(SPLITS)}, got {raw!r}")
    return raw.strip()


def _parse_text(raw, name: str, where: str) -> str:
    if raw is None or (isinstance(raw, str) and not raw.strip()):
        raise DatasetError(f"{where}: field '{name}' is empty")
    if not isinstance(raw, (str, int)) or isinstance(raw, bool):
        raise DatasetError(f"{where}: field '{name}' must be a string, got {raw!r}")
    return str(raw).strip()


def _record_from_mapping(row: dict, where: str) -> PredictionRecord:
    missing = [f for f in FIELDS if f not in row]
    if missing:
        raise DatasetError(f"{where}: missing field '{missing[0]}'")
    return PredictionRecord(
        image_id=_parse_text(row["image_id"], "image_id", where),
        subject_id=_parse_text(row["subject_id"], "subject_id", where),
        cohort=_parse_text(row["cohort"], "cohort", where),
        split=_parse_split(row["split"], where),
        label=_parse_label(row["label"], where),
        score=_parse_score(row["score"], where),
    )


def _parse_csv(text: str) -> list[PredictionRecord]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DatasetError("empty input: missing header") from None
    header = [h.strip().lstrip("﻿") for h in header]
    if tuple(header) != FIELDS:
        raise DatasetError(f"line 1: header must be '{','.join(FIELDS)}', got '{','.join(header)}'")
    records = []
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(FIELDS):
            raise DatasetError(f"line {line}: expected {len(FIELDS)} fields, got {len(row)}")
        records.append(_record_from_mapping(dict(zip(FIELDS, row)), f"line {line}"))
    return records


def _parse_json(text: str) -> list[PredictionRecord]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"line {exc.lineno}: invalid JSON ({exc.msg})") from None
    return records_from_objects(doc)


def records_from_objects(doc) -> list[PredictionRecord]:
    """Build records from an already-decoded JSON array of objects."""
    if not isinstance(doc, list):
        raise DatasetError("JSON dataset must be an array of objects")
    records = []
    for i, obj in enumerate(doc):
        where = f"element {i}"
        if not isinstance(obj, dict):
            raise DatasetError(f"{where}: expected an object")
        records.append(_record_from_mapping(obj, where))
    return records


def parse_records(stream: str | io.TextIOBase, format: str = "csv", provenance: str = "") -> Dataset:
    """Parse a CSV or JSON document into a :class:`Dataset`.

    Records keep input order.  Raises :class:`DatasetError` on malformed
    rows (naming line and field), unknown split values, unparseable scores,
    or when no records are present.
    """
    text = stream if isinstance(stream, str) else stream.read()
    if format == "csv":
        records = _parse_csv(text)
    elif format == "json":
        records = _parse_json(text)
    else:
        raise DatasetError(f"unknown format {format!r}; expected csv or json")
    if not records:
        raise DatasetError("no records")
    return Dataset(tuple(records), provenance or f"<{format} stream>")


def format_for_path(path: str | Path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix == ".json":
        return "json"
    if suffix == ".csv":
        return "csv"
    raise DatasetError(f"cannot infer format from extension of {path}; pass --format")


def load_dataset(path: str | Path, format: str | None = None) -> Dataset:
    fmt = format or format_for_path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_records(fh.read(), fmt, provenance=str(path))


def _fmt_score(x: float) -> str:
    return repr(float(x))


def to_csv(d: Dataset | Iterable[PredictionRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FIELDS)
    for r in d:
        writer.writerow([r.image_id, r.subject_id, r.cohort, r.split, r.label, _fmt_score(r.score)])
    return buf.getvalue()


def to_json(d: Dataset | Iterable[PredictionRecord]) -> str:
    return json.dumps([r.as_dict() for r in d], indent=1) + "\n"


def serialize(d: Dataset, format: str = "csv") -> str:
    if format == "csv":
        return to_csv(d)
    if format == "json":
        return to_json(d)
    raise DatasetError(f"unknown format {format!r}")


# --------------------------------------------------------------------------
# validation and grouping


def validate(d: Dataset) -> ValidationReport:
    """Collect every invariant violation; an empty report means accepted."""
    out: list[Violation] = []
    if not d.records:
        out.append(Violation("empty", "no records"))
    seen: set[str] = set()
    first_of_subject: dict[str, PredictionRecord] = {}
    flagged: set[tuple[str, str]] = set()
    for r in d.records:
        if not (isinstance(r.score, float) and math.isfinite(r.score) and 0.0 <= r.score <= 1.0):
            out.append(Violation("score_range", f"score out of [0,1]: {r.score!r} (image {r.image_id})",
                                 r.image_id, r.subject_id))
        if r.label not in (0, 1):
            out.append(Violation("label_value", f"label must be 0 or 1: {r.label!r} (image {r.image_id})",
                                 r.image_id, r.subject_id))
        if r.split not in SPLITS:
            out.append(Violation("split_value", f"unknown split {r.split!r} (image {r.image_id})",
                                 r.image_id, r.subject_id))
        if r.image_id in seen:
            out.append(Violation("duplicate_image_id", f"duplicate image_id {r.image_id}",
                                 r.image_id, r.subject_id))
        seen.add(r.image_id)
        first = first_of_subject.setdefault(r.subject_id, r)
        for attr in ("label", "cohort", "split"):
            key = (r.subject_id, attr)
            if getattr(first, attr) != getattr(r, attr) and key not in flagged:
                flagged.add(key)
                out.append(Violation(f"inconsistent_{attr}",
                                     f"inconsistent {attr} for subject {r.subject_id}: "
                                     f"{getattr(first, attr)!r} vs {getattr(r, attr)!r}",
                                     r.image_id, r.subject_id))
    return ValidationReport(tuple(out))


def require_valid(d: Dataset) -> Dataset:
    report = validate(d)
    if not report.ok:
        raise DatasetError(report.render())
    return d


def group_records(records: Sequence[PredictionRecord]) -> list[SubjectGroup]:
    buckets: dict[str, list[PredictionRecord]] = defaultdict(list)
    for r in records:
        buckets[r.subject_id].append(r)
    groups = []
    for sid in sorted(buckets):
        rs = buckets[sid]
        first = rs[0]
        groups.append(SubjectGroup(sid, first.label, first.cohort, first.split,
                                   tuple((r.image_id, r.score) for r in rs)))
    return groups


def partition_and_group(d: Dataset, split: str | None = None, cohort: str | None = None) -> list[SubjectGroup]:
    """Filter by split and/or cohort, then group by subject (sorted by id)."""
    return group_records(d.filter(split, cohort).records)
