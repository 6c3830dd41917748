import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from screeneval.dataset import SubjectGroup
from screeneval.errors import ScreenEvalError
from screeneval.voting import VoteStrategy, aggregate_dataset, vote


def test_examples():
    assert vote([0.2, 0.9, 0.4], "max") == 0.9
    assert vote([0.2, 0.9, 0.4], VoteStrategy.MEAN) == pytest.approx(0.5, abs=1e-15)
    assert vote([0.7], "max") == vote([0.7], "mean") == 0.7


def test_empty_scores_rejected():
    with pytest.raises(ScreenEvalError, match="no scores for subject"):
        vote([], "max")


def test_strategy_aliases():
    assert VoteStrategy.parse("max_voting") is VoteStrategy.MAX
    assert VoteStrategy.parse("Mean") is VoteStrategy.MEAN
    with pytest.raises(ScreenEvalError):
        VoteStrategy.parse("median")


def _group(sid, label, scores):
    return SubjectGroup(sid, label, "A", "test", tuple((f"{sid}-{i}", s) for i, s in enumerate(scores)))


def test_aggregate_examples():
    groups = [_group("a", 0, [0.1, 0.3]), _group("b", 1, [0.8])]
    mean = aggregate_dataset(groups, "mean")
    assert [s.score for s in mean] == [pytest.approx(0.2), 0.8]
    assert [s.score for s in aggregate_dataset(groups, "max")] == [0.3, 0.8]
    assert [(s.subject_id, s.label) for s in mean] == [("a", 0), ("b", 1)]


def test_aggregate_full_fixture(test_fixture):
    from screeneval.dataset import partition_and_group
    subjects = aggregate_dataset(partition_and_group(test_fixture), "mean")
    assert len(subjects) == 478


def test_mean_never_reaches_max_for_adjacent_floats():
    # no float lies strictly between these two, and rounding must not land on the max
    xs = [0.1] * 3 + [0.10000000000000002]
    m = vote(xs, "mean")
    assert min(xs) <= m < max(xs)


scores = st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=12)


@settings(max_examples=500, deadline=None)
@given(scores, st.floats(0, 1))
def test_max_dominates_mean(xs, tau):
    mx, mn = vote(xs, "max"), vote(xs, "mean")
    assert mx >= mn
    assert (mx == mn) == (len(set(xs)) == 1)
    if mn >= tau:
        assert mx >= tau


@settings(max_examples=300, deadline=None)
@given(scores, st.randoms(use_true_random=False))
def test_votes_ignore_image_order(xs, rnd):
    ys = list(xs)
    rnd.shuffle(ys)
    assert vote(xs, "max") == vote(ys, "max")
    assert math.isclose(vote(xs, "mean"), vote(ys, "mean"), rel_tol=0, abs_tol=1e-15)
