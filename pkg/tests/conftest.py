from __future__ import annotations

import pytest

from screeneval.dataset import Dataset, PredictionRecord
from screeneval.fixtures import StratumTarget, realize_counts

from reference_values import CONFUSION, DEV_SHAPE, TEST_SHAPE


def make_records(rows, split="test", cohort="A") -> Dataset:
    """rows: iterable of (subject_id, label, [scores...])."""
    recs = []
    for sid, label, scores in rows:
        for j, s in enumerate(scores):
            recs.append(PredictionRecord(f"{sid}-{j}", sid, cohort, split, label, float(s)))
    return Dataset(tuple(recs), "constructed")


def reported_test_targets() -> list[StratumTarget]:
    out = []
    for cohort, (p_subj, p_img, n_subj, n_img) in TEST_SHAPE.items():
        tp_i, _, fp_i, _ = CONFUSION[(cohort, "image")]
        tp_x, _, fp_x, _ = CONFUSION[(cohort, "max")]
        tp_m, _, fp_m, _ = CONFUSION[(cohort, "mean")]
        out.append(StratumTarget(cohort, 1, p_subj, p_img, tp_i, tp_x, tp_m))
        out.append(StratumTarget(cohort, 0, n_subj, n_img, fp_i, fp_x, fp_m))
    return out


def dev_targets() -> list[StratumTarget]:
    """Development set that is separable at 0.5, with one positive subject pinned at 0.5.

    Best-F1 calibration on it then lands on exactly 0.5 for every level.
    """
    out = []
    for (cohort, label), (tr_s, tr_i, va_s, va_i) in DEV_SHAPE.items():
        for split, s, i in (("train", tr_s, tr_i), ("validation", va_s, va_i)):
            if s == 0:
                continue
            hits = (i, s, s) if label == 1 else (0, 0, 0)
            out.append(StratumTarget(cohort, label, s, i, *hits, split=split,
                                     pinned=label == 1 and split == "validation"))
    return out


@pytest.fixture(scope="session")
def test_fixture() -> Dataset:
    return realize_counts(reported_test_targets(), threshold=0.5, seed=0, provenance="reported-counts test fixture")


@pytest.fixture(scope="session")
def dev_fixture() -> Dataset:
    return realize_counts(dev_targets(), threshold=0.5, seed=1, provenance="separable development fixture")


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
