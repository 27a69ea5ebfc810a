import numpy as np
import pytest

from dyncoreset.core import Metric, PointSet


def blobs(n, d, centers, std=0.5, seed=0):
    rng = np.random.default_rng(seed)
    C = np.asarray(centers, dtype=float)
    lab = rng.integers(len(C), size=n)
    return C[lab] + rng.normal(scale=std, size=(n, d))


@pytest.fixture
def four_blobs():
    m = Metric.euclidean(2)
    X = blobs(2000, 2, [(0, 0), (6, 6), (0, 6), (6, 0)], seed=11)
    return PointSet.from_array(X, m), m


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    lines = mod.summary_lines() if mod is not None else []
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
