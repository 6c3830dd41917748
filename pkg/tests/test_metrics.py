import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from screeneval.errors import ScreenEvalError, UndefinedMetricError
from screeneval.metrics import (
    ConfusionMatrix,
    auc,
    confusion_at,
    metric_value,
    metrics_from_confusion,
    roc_points,
    trapezoid_area,
)

from oracles import pairwise_auc
from reference_values import CONFUSION, METRIC_TOLERANCE, METRICS

FOUR = [(0.8, 1), (0.4, 1), (0.6, 0), (0.2, 0)]


def test_confusion_examples():
    assert confusion_at([(0.9, 1), (0.2, 0)], 0.5) == ConfusionMatrix(1, 0, 0, 1)
    cm = confusion_at(FOUR, 0.0)
    assert (cm.fp, cm.fn_) == (2, 0)


def test_confusion_rule_is_inclusive_by_default():
    assert confusion_at([(0.5, 1), (0.5, 0)], 0.5) == ConfusionMatrix(1, 0, 1, 0)
    assert confusion_at([(0.5, 1), (0.5, 0)], 0.5, "gt") == ConfusionMatrix(0, 1, 0, 1)


def test_confusion_empty_input():
    with pytest.raises(ScreenEvalError):
        confusion_at([], 0.5)


@pytest.mark.parametrize("key", sorted(CONFUSION))
def test_reported_counts_reproduce_reported_metrics(key):
    m = metrics_from_confusion(ConfusionMatrix(*CONFUSION[key]))
    for name, expected in zip(("sensitivity", "specificity", "accuracy", "f1"), METRICS[key]):
        assert abs(m.get(name) - expected) <= METRIC_TOLERANCE, (key, name)


def test_perfect_classifier():
    m = metrics_from_confusion(ConfusionMatrix(7, 0, 0, 11))
    assert (m.sensitivity, m.specificity, m.accuracy, m.f1) == (1.0, 1.0, 1.0, 1.0)


@pytest.mark.parametrize("cm, name", [(ConfusionMatrix(3, 1, 0, 0), "specificity"),
                                      (ConfusionMatrix(0, 0, 2, 5), "sensitivity")])
def test_single_class_is_undefined(cm, name):
    with pytest.raises(UndefinedMetricError, match=f"undefined metric: {name}"):
        metrics_from_confusion(cm)


def test_roc_examples():
    curve = roc_points([(1.0, 1), (0.0, 0)])
    assert list(zip(curve.fpr, curve.tpr)) == [(0, 0), (0, 1), (1, 1)]
    assert curve.auc == 1.0
    flat = roc_points([(0.3, 1), (0.3, 0), (0.3, 0)])
    assert list(zip(flat.fpr, flat.tpr)) == [(0, 0), (1, 1)]
    assert flat.auc == 0.5
    assert roc_points(FOUR).auc == 0.75


def test_roc_csv_layout():
    text = roc_points(FOUR).to_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "threshold,fpr,tpr"
    assert lines[1].startswith("inf,0")
    assert len(lines) == 1 + 5


def test_auc_examples():
    assert auc(FOUR) == 0.75
    assert auc([(0.4, 0), (0.4, 1), (0.4, 1)]) == 0.5
    with pytest.raises(ScreenEvalError):
        auc([(0.1, 1), (0.2, 1)])


def _random_instance(rng: random.Random):
    n = rng.randint(2, 50)
    grid = rng.choice([3, 10, 1000])  # coarse grids force many ties
    labels = [0, 1] + [rng.randint(0, 1) for _ in range(n - 2)]
    return [(rng.randint(0, grid) / grid, y) for y in labels]


def test_auc_equals_pairwise_oracle_on_random_instances():
    rng = random.Random(20240501)
    for _ in range(1000):
        inst = _random_instance(rng)
        assert auc(inst) == pairwise_auc(inst)


def test_auc_equals_trapezoid_area():
    rng = random.Random(7)
    for _ in range(1000):
        curve = roc_points(_random_instance(rng))
        assert abs(curve.auc - trapezoid_area(curve)) <= 1e-12


def test_auc_accepts_arrays():
    s = np.array([0.8, 0.4, 0.6, 0.2])
    y = np.array([1, 1, 0, 0])
    assert auc((s, y)) == 0.75


pairs = st.lists(st.tuples(st.floats(0, 1, allow_nan=False), st.integers(0, 1)), min_size=2, max_size=40).filter(
    lambda xs: len({y for _, y in xs}) == 2)


@settings(max_examples=300, deadline=None)
@given(pairs)
def test_auc_invariant_under_monotone_transform(xs):
    transformed = [(math.sqrt(s) * 0.5 + 0.25, y) for s, y in xs]
    # sqrt is strictly increasing but rounding can merge neighbouring floats; compare on the oracle
    assert auc(transformed) == pairwise_auc(transformed)
    if len({s for s, _ in xs}) == len({s for s, _ in transformed}):
        assert auc(transformed) == auc(xs)


@settings(max_examples=300, deadline=None)
@given(pairs)
def test_label_flip_complements_auc(xs):
    flipped = [(s, 1 - y) for s, y in xs]
    assert auc(flipped) == pytest.approx(1.0 - auc(xs), abs=1e-12)


def test_metric_value_dispatch():
    assert metric_value("auc", FOUR) == 0.75
    assert metric_value("accuracy", FOUR, 0.5) == 0.5
    with pytest.raises(ScreenEvalError):
        metric_value("sensitivity", FOUR)
    with pytest.raises(ScreenEvalError):
        metric_value("youden", FOUR, 0.5)
