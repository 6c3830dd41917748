import json

import numpy as np
import pytest

from screeneval.dataset import partition_and_group, serialize, validate
from screeneval.errors import ConfigError
from screeneval.metrics import auc
from screeneval.simulate import ClassModel, SimConfig, clamp_error_bound, load_config, simulate_cohort, theoretical_auc
from screeneval.voting import aggregate_dataset

from oracles import gaussian_auc, pairwise_auc
from reference_values import TEST_SHAPE

TABLE_SHAPE = {c: (p, n) for c, (p, _, n, _) in TEST_SHAPE.items()}


def test_reported_test_shape():
    d = simulate_cohort(SimConfig(TABLE_SHAPE))
    groups = partition_and_group(d, split="test")
    assert len(groups) == 478
    assert sum(g.label for g in groups) == 64
    assert all(3 <= len(g) <= 5 for g in groups)
    assert validate(d).ok


def test_non_overlapping_classes_separate_perfectly():
    cfg = SimConfig({"A": (50, 50)}, positive=ClassModel(0.99, 0.001), negative=ClassModel(0.01, 0.001))
    d = simulate_cohort(cfg)
    assert auc([(r.score, r.label) for r in d.records]) == 1.0


def test_same_seed_same_dataset_different_seed_differs():
    cfg = SimConfig({"A": (20, 30), "B": (5, 5)}, split_fractions=(0.6, 0.2, 0.2), seed=4)
    assert simulate_cohort(cfg).records == simulate_cohort(cfg).records
    assert serialize(simulate_cohort(cfg)) == serialize(simulate_cohort(cfg))
    assert simulate_cohort(cfg).records != simulate_cohort(cfg.with_seed(5)).records


def test_split_fractions_are_subject_wise_and_stratified():
    cfg = SimConfig({"A": (100, 200)}, split_fractions=(0.7, 0.1, 0.2))
    d = simulate_cohort(cfg)
    counts = {}
    for g in partition_and_group(d):
        counts[(g.split, g.label)] = counts.get((g.split, g.label), 0) + 1
    assert counts == {("train", 1): 70, ("validation", 1): 10, ("test", 1): 20,
                      ("train", 0): 140, ("validation", 0): 20, ("test", 0): 40}
    assert validate(d).ok


def test_adding_a_cohort_keeps_earlier_subjects():
    a = simulate_cohort(SimConfig({"A": (10, 10)}))
    b = simulate_cohort(SimConfig({"A": (10, 10), "B": (4, 4)}))
    assert b.records[:len(a.records)] == a.records


def test_full_subject_effect_makes_votes_agree():
    d = simulate_cohort(SimConfig({"A": (30, 30)}, subject_effect=1.0))
    groups = partition_and_group(d)
    mx = [s.score for s in aggregate_dataset(groups, "max")]
    mn = [s.score for s in aggregate_dataset(groups, "mean")]
    assert mx == mn


def test_zero_subjects_rejected():
    with pytest.raises(ConfigError):
        simulate_cohort(SimConfig({"A": (0, 0)}))


@pytest.mark.parametrize("kwargs", [
    dict(images_per_subject=(0, 2)),
    dict(subject_effect=1.5),
    dict(split_fractions=(0.5, 0.5, 0.5)),
    dict(seed=-1),
])
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        SimConfig({"A": (1, 1)}, **kwargs)


def test_config_file_round_trip(tmp_path):
    cfg = SimConfig({"A": (3, 4)}, split_fractions=(0.5, 0.25, 0.25), seed=9)
    p = tmp_path / "sim.json"
    p.write_text(json.dumps(cfg.as_dict()))
    assert load_config(p) == cfg
    p.write_text(json.dumps({"subjects_per_cohort": {"A": [1, 1]},
                             "split_fractions": {"train": 0.5, "test": 0.5}}))
    assert load_config(p).split_fractions == (0.5, 0.0, 0.5)
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)


def test_oracle_examples():
    same = SimConfig({"A": (1, 1)}, positive=ClassModel(0.4, 0.1), negative=ClassModel(0.4, 0.1))
    assert theoretical_auc(same) == 0.5
    sharp = SimConfig({"A": (1, 1)}, positive=ClassModel(0.7, 1e-9), negative=ClassModel(0.3, 1e-9))
    assert theoretical_auc(sharp) == pytest.approx(1.0)
    ref = SimConfig({"A": (1, 1)}, subject_effect=0.0)
    assert theoretical_auc(ref) == pytest.approx(0.9214, abs=5e-5)
    assert theoretical_auc(ref) == pytest.approx(gaussian_auc(0.7, 0.3, 0.2, 0.2), abs=1e-12)


def test_oracle_against_monte_carlo():
    rng = np.random.default_rng(2024)
    pos = rng.normal(0.7, 0.2, 10**6)
    neg = rng.normal(0.3, 0.2, 10**6)
    estimate = float(np.mean(pos > neg))
    assert abs(estimate - 0.9214) < 2e-3


def test_oracle_with_subject_effect():
    cfg = SimConfig({"A": (1, 1)}, subject_effect=0.5)
    assert theoretical_auc(cfg) == pytest.approx(gaussian_auc(0.7, 0.3, 0.2, 0.2, 0.5), abs=1e-12)


def test_oracle_refuses_heavy_clamping():
    cfg = SimConfig({"A": (1, 1)}, positive=ClassModel(0.95, 0.3), negative=ClassModel(0.9, 0.3))
    assert clamp_error_bound(cfg) > 1e-3
    with pytest.raises(ConfigError, match="oracle inapplicable"):
        theoretical_auc(cfg)


@pytest.mark.parametrize("seed", range(5))
def test_simulated_auc_converges_to_oracle(seed):
    cfg = SimConfig({"Sim": (10_000, 10_000)}, images_per_subject=(1, 1), subject_effect=0.0, seed=seed)
    d = simulate_cohort(cfg)
    assert abs(auc([(r.score, r.label) for r in d.records]) - theoretical_auc(cfg)) <= 0.02


def test_simulated_auc_with_subject_effect_matches_pairwise():
    cfg = SimConfig({"Sim": (60, 60)}, seed=11)
    scored = [(r.score, r.label) for r in simulate_cohort(cfg).records]
    assert auc(scored) == pairwise_auc(scored)
