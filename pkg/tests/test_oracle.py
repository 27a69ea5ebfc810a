import json

import numpy as np
import pytest

from dyncoreset.core import Metric, PointSet
from dyncoreset.epoch import Coreset
from dyncoreset.oracle import (additive_error_ok, brute_opt, churn_audit, distortion, uniform_sample_coreset)


def test_brute_opt_collinear():
    m = Metric.euclidean(1)
    P = PointSet.from_array(np.array([[0.0], [1.0], [10.0], [11.0]]), m)
    cost, rows = brute_opt(P, m, 2, 2)
    # centers restricted to input points: {0 or 1} and {10 or 11}, each pair costs 1
    assert cost == pytest.approx(2.0)
    assert sorted(P.locs[list(rows), 0] // 10) == [0.0, 1.0]
    # free centers at the pair midpoints would give 4 * 0.25
    assert sum(min((x - c) ** 2 for c in (0.5, 10.5)) for x in (0, 1, 10, 11)) == pytest.approx(1.0)


def test_brute_opt_k_at_least_n():
    m = Metric.euclidean(1)
    P = PointSet.from_array(np.array([[0.0], [1.0]]), m)
    assert brute_opt(P, m, 3, 2)[0] == 0.0


def test_brute_opt_refuses_large_instances():
    m = Metric.euclidean(1)
    P = PointSet.from_array(np.arange(200.0)[:, None], m)
    with pytest.raises(ValueError):
        brute_opt(P, m, 5, 2)


def test_distortion_of_exact_copy_is_zero():
    m = Metric.euclidean(2)
    P = PointSet.from_array(np.random.default_rng(0).normal(size=(100, 2)), m)
    rep = distortion(P, Coreset.from_pointset(P), m, 3, 2, 30, np.random.default_rng(1))
    assert rep.max_rel_err == pytest.approx(0.0, abs=1e-12)
    assert rep.max_rel_err >= rep.mean_rel_err >= 0
    assert json.loads(rep.to_json())["num_solutions"] == 30


def test_distortion_of_doubled_weights_is_one():
    m = Metric.euclidean(2)
    P = PointSet.from_array(np.random.default_rng(0).normal(size=(50, 2)), m)
    Q = PointSet(P.ids, P.locs, P.weights * 2)
    assert distortion(P, Q, m, 2, 2, 9, np.random.default_rng(1)).max_rel_err == pytest.approx(1.0)


def test_uniform_sample_coreset_weights():
    m = Metric.euclidean(1)
    G = PointSet.from_array(np.arange(100.0)[:, None], m)
    S = uniform_sample_coreset(G, 10, np.random.default_rng(0))
    assert len(S) == 10
    assert S.total_weight == pytest.approx(100.0)
    with pytest.raises(ValueError):
        uniform_sample_coreset(G, 101, np.random.default_rng(0))


def test_additive_error_full_sample_is_exact():
    m = Metric.euclidean(1)
    G = PointSet.from_array(np.arange(20.0)[:, None], m)
    S = uniform_sample_coreset(G, 20, np.random.default_rng(0))
    assert additive_error_ok(G, S, np.array([[5.0]]), [np.array([[1.0]]), np.array([[30.0]])], m, 2, 1e-9)


def test_churn_audit():
    assert churn_audit((3, 1), n_i=2, n_d=1)
    assert not churn_audit((4, 1), n_i=2, n_d=1)
    assert not churn_audit((1, 2), n_i=2, n_d=1)


def test_brute_opt_invariant_under_rotation_and_translation():
    rng = np.random.default_rng(21)
    X = rng.normal(size=(9, 2))
    th = 0.7
    R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    m = Metric.euclidean(2)
    a, _ = brute_opt(PointSet.from_array(X, m), m, 3, 2)
    b, _ = brute_opt(PointSet.from_array(X @ R.T + [5.0, -3.0], m), m, 3, 2)
    assert a == pytest.approx(b, rel=1e-9)


def test_uniform_sample_inclusion_and_expected_weight():
    m = Metric.euclidean(1)
    G = PointSet.from_array(np.arange(20, dtype=float)[:, None], m, weights=np.linspace(1, 2, 20))
    rng = np.random.default_rng(4)
    hits = np.zeros(20)
    tot = 0.0
    for _ in range(4000):
        om = uniform_sample_coreset(G, 5, rng)
        hits[om.ids] += 1
        tot += om.total_weight
    # each point is drawn with probability n_c / |G|, and the total weight is unbiased
    assert np.allclose(hits / 4000, 0.25, atol=0.03)
    assert tot / 4000 == pytest.approx(G.total_weight, rel=0.01)
