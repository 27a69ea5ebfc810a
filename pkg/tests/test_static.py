import math
from itertools import combinations

import numpy as np
import pytest

from dyncoreset.core import Metric, PointSet
from dyncoreset.oracle import brute_opt
from dyncoreset.static import (bicriteria_init, d2_seeding, default_swaps, lloyd, local_search, query_solve,
                               solution_for)

from conftest import blobs


def test_d2_seeding_all_points_when_t_exceeds_n():
    m = Metric.euclidean(1)
    P = PointSet.from_array(np.array([[0.0], [1.0], [2.0]]), m)
    sol = d2_seeding(P, m, 5, 2, np.random.default_rng(0))
    assert sol.total_cost == 0.0
    assert sorted(sol.center_index.tolist()) == [0, 1, 2]


def test_d2_seeding_never_picks_a_duplicate_center_while_cost_remains():
    m = Metric.euclidean(1)
    X = np.array([[0.0]] * 50 + [[10.0]])
    P = PointSet.from_array(X, m)
    for s in range(20):
        sol = d2_seeding(P, m, 2, 2, np.random.default_rng(s))
        assert sol.total_cost == 0.0


def test_d2_seeding_falls_back_when_all_residuals_vanish():
    m = Metric.euclidean(1)
    P = PointSet.from_array(np.zeros((4, 1)), m)
    sol = d2_seeding(P, m, 3, 2, np.random.default_rng(0))
    assert len(set(sol.center_index.tolist())) == 3


def test_local_search_zero_swaps_is_identity():
    m = Metric.euclidean(2)
    P = PointSet.from_array(blobs(200, 2, [(0, 0), (5, 5)]), m)
    sol = d2_seeding(P, m, 2, 2, np.random.default_rng(1))
    out = local_search(P, m, sol, 2, 0, np.random.default_rng(1))
    assert out is sol


def test_local_search_keeps_optimum_on_four_points():
    m = Metric.euclidean(1)
    P = PointSet.from_array(np.array([[0.0], [1.0], [10.0], [11.0]]), m)
    opt, rows = brute_opt(P, m, 2, 2)
    sol = solution_for(P, P.locs[list(rows)], m, 2, np.array(rows))
    out = local_search(P, m, sol, 2, 50, np.random.default_rng(0))
    assert out.total_cost == pytest.approx(opt)


def test_local_search_never_increases_cost():
    m = Metric.euclidean(2)
    P = PointSet.from_array(blobs(300, 2, [(0, 0), (8, 0), (0, 8)], seed=3), m)
    for s in range(5):
        # adversarial seeding: all centers from one blob
        idx = np.nonzero(P.locs[:, 0] + P.locs[:, 1] < 2)[0][:3]
        sol = solution_for(P, P.locs[idx], m, 2, idx)
        out = local_search(P, m, sol, 2, 30, np.random.default_rng(s))
        assert out.total_cost <= sol.total_cost


def test_local_search_monotone_in_budget():
    m = Metric.euclidean(2)
    P = PointSet.from_array(blobs(300, 2, [(0, 0), (8, 0), (0, 8), (8, 8)], seed=4), m)
    sol = d2_seeding(P, m, 4, 2, np.random.default_rng(2))
    costs = [local_search(P, m, sol, 2, s, np.random.default_rng(7)).total_cost for s in (0, 5, 20, 60)]
    assert all(a >= b for a, b in zip(costs, costs[1:]))


def test_bicriteria_small_input_is_exact():
    m = Metric.euclidean(1)
    P = PointSet.from_array(np.array([[0.0], [3.0], [7.0]]), m)
    assert bicriteria_init(P, m, 2, 2, np.random.default_rng(0)).total_cost == 0.0


def test_bicriteria_footnote_instance():
    # k+1 points at pairwise distance 1: k centers leave cost >= 1, 2k centers cost 0
    k = 3
    M = np.ones((k + 1, k + 1)) - np.eye(k + 1)
    m = Metric.from_matrix(M)
    P = PointSet.from_array(np.arange(k + 1), m)
    assert brute_opt(P, m, k, 2)[0] >= 1.0
    assert bicriteria_init(P, m, k, 2, np.random.default_rng(0)).total_cost == 0.0


def test_bicriteria_within_factor_ten_of_opt_2k():
    m = Metric.euclidean(2)
    for s in range(20):
        rng = np.random.default_rng(s)
        P = PointSet.from_array(rng.normal(size=(20, 2)) * rng.uniform(0.5, 3), m)
        opt, _ = brute_opt(P, m, 4, 2)
        A = bicriteria_init(P, m, 2, 2, np.random.default_rng(100 + s))
        assert len(A.centers) == 4
        assert A.total_cost <= 10 * opt + 1e-12


def test_bicriteria_reproducible():
    m = Metric.euclidean(2)
    P = PointSet.from_array(blobs(500, 2, [(0, 0), (5, 5)], seed=5), m)
    a = bicriteria_init(P, m, 3, 2, np.random.default_rng(9))
    b = bicriteria_init(P, m, 3, 2, np.random.default_rng(9))
    assert np.array_equal(a.centers, b.centers)


def test_default_swaps():
    assert default_swaps(2) == 2 * 2 * math.ceil(math.log2(3))
    assert default_swaps(10) == 60


def test_lloyd_does_not_increase_cost():
    m = Metric.euclidean(2)
    P = PointSet.from_array(blobs(400, 2, [(0, 0), (5, 5), (0, 5)], seed=6), m)
    sol = d2_seeding(P, m, 3, 2, np.random.default_rng(0))
    assert lloyd(P, m, sol, 2).total_cost <= sol.total_cost


def test_query_solve_on_k_points():
    m = Metric.euclidean(2)
    P = PointSet.from_array(np.array([[0.0, 0.0], [1.0, 1.0], [4.0, 4.0]]), m)
    assert query_solve(P, m, 3, 2, np.random.default_rng(0)).total_cost == 0.0
    with pytest.raises(ValueError):
        query_solve(PointSet.empty(m), m, 3, 2, np.random.default_rng(0))


def test_query_solve_matrix_restricts_centers():
    X = np.random.default_rng(0).normal(size=(30, 2))
    M = np.sqrt(((X[:, None] - X[None]) ** 2).sum(-1))
    m = Metric.from_matrix(M, check=False)
    P = PointSet.from_array(np.arange(30), m)
    sol = query_solve(P, m, 3, 2, np.random.default_rng(0), restrict_to_coreset=True)
    assert set(sol.centers.tolist()) <= set(range(30))
