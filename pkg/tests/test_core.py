import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dyncoreset.core import (CostParams, Metric, PointSet, WeightedPoint, assign, dist, point_cost,
                             set_cost)


def test_weighted_point_rejects_nonpositive_weight():
    with pytest.raises(ValueError):
        WeightedPoint(0, (1.0, 2.0), 0.0)


def test_dist_euclidean():
    m = Metric.euclidean(2)
    assert dist(WeightedPoint(0, (0.0, 0.0)), WeightedPoint(1, (3.0, 4.0)), m) == pytest.approx(5.0)


def test_dimension_mismatch():
    m = Metric.euclidean(2)
    with pytest.raises(ValueError):
        m.as_locations([1.0, 2.0, 3.0])


def test_point_cost_k_means_and_median():
    m = Metric.euclidean(1)
    p = WeightedPoint(0, (3.0,), 2.0)
    S = np.array([[0.0], [10.0]])
    assert point_cost(p, S, m, z=2) == pytest.approx(18.0)
    assert point_cost(p, S, m, z=1) == pytest.approx(6.0)
    c, i = point_cost(p, S, m, z=2, return_index=True)
    assert i == 0


def test_set_cost_empty_centers():
    m = Metric.euclidean(1)
    P = PointSet.from_array(np.array([[1.0]]), m)
    with pytest.raises(ValueError):
        set_cost(P, np.empty((0, 1)), m)


def test_assign_ties_go_to_lowest_index():
    m = Metric.euclidean(1)
    P = PointSet.from_array(np.array([[5.0]]), m)
    _, lab = assign(P, np.array([[0.0], [10.0]]), m, 2)
    assert lab[0] == 0


def test_matrix_metric_checks_triangle_inequality():
    M = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], dtype=float)
    with pytest.raises(ValueError):
        Metric.from_matrix(M)


def test_matrix_metric_rejects_asymmetry_and_bad_index():
    with pytest.raises(ValueError):
        Metric.from_matrix(np.array([[0, 1.0], [2.0, 0]]))
    m = Metric.from_matrix(np.array([[0, 1.0], [1.0, 0]]))
    with pytest.raises(IndexError):
        m.as_locations([5])


def test_cost_params_validation():
    with pytest.raises(ValueError):
        CostParams(k=0)
    with pytest.raises(ValueError):
        CostParams(k=2, z=3)
    with pytest.raises(ValueError):
        CostParams(k=2, epsilon=0.5)
    assert CostParams(k=2, epsilon=1 / 3).epsilon == pytest.approx(1 / 3)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=2, max_size=30), st.floats(-100, 100))
def test_set_cost_matches_naive_sum(xs, c):
    m = Metric.euclidean(1)
    P = PointSet.from_array(np.array(xs)[:, None], m)
    want = sum((x - c) ** 2 for x in xs)
    assert set_cost(P, np.array([[c]]), m, 2) == pytest.approx(want, rel=1e-9, abs=1e-9)


def test_matrix_costs_match_euclidean_on_a_line():
    xs = np.array([0.0, 1.0, 10.0, 11.0])
    M = np.abs(xs[:, None] - xs[None, :])
    mm = Metric.from_matrix(M)
    me = Metric.euclidean(1)
    Pm = PointSet.from_array(np.arange(4), mm)
    Pe = PointSet.from_array(xs[:, None], me)
    assert set_cost(Pm, np.array([0, 2]), mm, 2) == pytest.approx(set_cost(Pe, xs[[0, 2]][:, None], me, 2))
