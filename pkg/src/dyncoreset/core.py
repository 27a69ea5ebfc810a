"""Points, metrics and the (k, z) clustering cost.

Point sets are stored column-wise in :class:`PointSet` (ids, locations,
weights) so that cost evaluations stay vectorized.  A *location* is a row of
a float array in Euclidean mode, or an integer index into a distance matrix
in matrix mode.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class OpCounter:
    """Counts primitive operations (distance evaluations and bookkeeping steps).

    Used to measure amortized update work independently of wall-clock noise.
    """

    __slots__ = ("dist", "steps")

    def __init__(self) -> None:
        self.dist = 0
        self.steps = 0

    @property
    def total(self) -> int:
        return self.dist + self.steps

    def reset(self) -> None:
        self.dist = 0
        self.steps = 0


ops = OpCounter()


@dataclass(frozen=True)
class WeightedPoint:
    id: int
    coords: np.ndarray | int
    weight: float = 1.0

    def __post_init__(self):
        if not self.weight > 0:
            raise ValueError(f"weight must be positive, got {self.weight}")


class Metric:
    """Euclidean space of dimension ``d`` or an explicit distance matrix."""

    def __init__(self, mode: str = "euclidean", d: int | None = None,
                 matrix: np.ndarray | None = None, check: bool = True):
        if mode not in ("euclidean", "matrix"):
            raise ValueError(f"unknown metric mode {mode!r}")
        self.mode = mode
        if mode == "euclidean":
            if d is None or d < 1:
                raise ValueError("euclidean mode needs a positive dimension")
            self.d = int(d)
            self.matrix = None
        else:
            if matrix is None:
                raise ValueError("matrix mode needs a distance matrix")
            M = np.asarray(matrix, dtype=float)
            if M.ndim != 2 or M.shape[0] != M.shape[1]:
                raise ValueError("distance matrix must be square")
            if check:
                _check_distance_matrix(M)
            self.matrix = M
            self.d = None

    @classmethod
    def euclidean(cls, d: int) -> "Metric":
        return cls("euclidean", d=d)

    @classmethod
    def from_matrix(cls, M, check: bool = True) -> "Metric":
        return cls("matrix", matrix=M, check=check)

    @property
    def is_euclidean(self) -> bool:
        return self.mode == "euclidean"

    @property
    def size(self) -> int | None:
        return None if self.matrix is None else self.matrix.shape[0]

    def as_locations(self, coords) -> np.ndarray:
        """Validate and convert coordinates (or matrix indices) to a location array."""
        if self.is_euclidean:
            X = np.asarray(coords, dtype=float)
            if X.ndim == 1:
                X = X.reshape(1, -1) if X.size == self.d else X.reshape(-1, self.d)
            if X.ndim != 2 or X.shape[1] != self.d:
                raise ValueError(f"dimension mismatch: expected {self.d}, got shape {np.shape(coords)}")
            return X
        idx = np.atleast_1d(np.asarray(coords))
        if idx.ndim != 1 or not np.issubdtype(idx.dtype, np.integer):
            if not np.all(np.equal(np.mod(idx, 1), 0)):
                raise ValueError("matrix mode expects integer point indices")
            idx = idx.astype(np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.matrix.shape[0]):
            raise IndexError(f"point index out of range for a {self.matrix.shape[0]}-point matrix")
        return idx.astype(np.int64)

    def empty_locations(self) -> np.ndarray:
        if self.is_euclidean:
            return np.empty((0, self.d))
        return np.empty(0, dtype=np.int64)

    def pairwise(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Distance matrix between location arrays ``X`` (m) and ``Y`` (t)."""
        ops.dist += len(X) * len(Y)
        if self.is_euclidean:
            return np.sqrt(_sqdist(X, Y))
        return self.matrix[np.ix_(X, Y)]

    def pow_dist(self, X: np.ndarray, Y: np.ndarray, z: int) -> np.ndarray:
        """``dist(x, y) ** z`` for all pairs; avoids the square root when z == 2."""
        if self.is_euclidean and z == 2:
            ops.dist += len(X) * len(Y)
            return _sqdist(X, Y)
        D = self.pairwise(X, Y)
        return D if z == 1 else D ** z

    def dist(self, a: WeightedPoint, b: WeightedPoint) -> float:
        X = self.as_locations(a.coords)
        Y = self.as_locations(b.coords)
        return float(self.pairwise(X, Y)[0, 0])


def _sqdist(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    if len(Y) == 1:
        diff = X - Y[0]
        return np.einsum("ij,ij->i", diff, diff)[:, None]
    if X.shape[1] <= 8:
        diff = X[:, None, :] - Y[None, :, :]
        return np.einsum("ijk,ijk->ij", diff, diff)
    D = (X * X).sum(1)[:, None] - 2.0 * X @ Y.T + (Y * Y).sum(1)[None, :]
    return np.maximum(D, 0.0)


def _check_distance_matrix(M: np.ndarray, atol: float = 1e-9) -> None:
    if np.any(M < 0):
        raise ValueError("distance matrix has negative entries")
    if np.any(np.abs(np.diag(M)) > atol):
        raise ValueError("distance matrix must have a zero diagonal")
    if not np.allclose(M, M.T, atol=atol):
        raise ValueError("distance matrix must be symmetric")
    n = M.shape[0]
    for k in range(n):
        # M[i, j] <= M[i, k] + M[k, j] for every pivot k
        if np.any(M > M[:, k:k + 1] + M[k:k + 1, :] + atol):
            raise ValueError(f"triangle inequality violated through point {k}")


@dataclass(frozen=True)
class CostParams:
    k: int
    z: int = 2
    epsilon: float = 0.2
    delta: float = 0.1
    seed: int = 0
    # multiplies the whole coreset size formula (1.0 = theory constants)
    coreset_scale: float = 1.0
    # multiplies the initially-large group cutoff (1.0 = theory constants)
    large_group_scale: float = 1.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.z not in (1, 2):
            raise ValueError("z must be 1 (k-median) or 2 (k-means)")
        if not 0 < self.epsilon <= 1 / 3:
            raise ValueError("epsilon must lie in (0, 1/3]")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.coreset_scale <= 0 or self.large_group_scale <= 0:
            raise ValueError("scales must be positive")


@dataclass
class PointSet:
    """Column-wise weighted point set."""

    ids: np.ndarray
    locs: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=float)
        if not (len(self.ids) == len(self.locs) == len(self.weights)):
            raise ValueError("ids, locs and weights must have equal length")

    def __len__(self) -> int:
        return len(self.ids)

    @classmethod
    def empty(cls, metric: Metric) -> "PointSet":
        return cls(np.empty(0, dtype=np.int64), metric.empty_locations(), np.empty(0))

    @classmethod
    def from_points(cls, points: Sequence[WeightedPoint], metric: Metric) -> "PointSet":
        if not points:
            return cls.empty(metric)
        locs = metric.as_locations([p.coords for p in points])
        return cls(np.array([p.id for p in points]), locs, np.array([p.weight for p in points]))

    @classmethod
    def from_array(cls, X, metric: Metric | None = None, weights=None, start_id: int = 0) -> "PointSet":
        X = np.asarray(X)
        if metric is not None:
            X = metric.as_locations(X)
        n = len(X)
        w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
        return cls(np.arange(start_id, start_id + n), X, w)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def subset(self, index) -> "PointSet":
        return PointSet(self.ids[index], self.locs[index], self.weights[index])

    def points(self) -> Iterable[WeightedPoint]:
        for i in range(len(self)):
            loc = self.locs[i]
            yield WeightedPoint(int(self.ids[i]), loc if np.ndim(loc) else int(loc), float(self.weights[i]))

    @staticmethod
    def concat(parts: Sequence["PointSet"], metric: Metric) -> "PointSet":
        parts = [p for p in parts if len(p)]
        if not parts:
            return PointSet.empty(metric)
        return PointSet(np.concatenate([p.ids for p in parts]),
                        np.concatenate([p.locs for p in parts]),
                        np.concatenate([p.weights for p in parts]))


def _locs_of(S, metric: Metric) -> np.ndarray:
    if isinstance(S, PointSet):
        return S.locs
    if isinstance(S, np.ndarray) and (S.ndim == 2 or not metric.is_euclidean):
        return metric.as_locations(S)
    if isinstance(S, WeightedPoint):
        return metric.as_locations(S.coords)
    if len(S) and isinstance(S[0], WeightedPoint):
        return metric.as_locations([s.coords for s in S])
    return metric.as_locations(S)


def dist(a: WeightedPoint, b: WeightedPoint, m: Metric) -> float:
    return m.dist(a, b)


def assign(P: PointSet, centers: np.ndarray, m: Metric, z: int):
    """Per-point weighted cost and nearest-center index (lowest index on ties)."""
    if len(centers) == 0:
        raise ValueError("center set is empty")
    D = m.pow_dist(P.locs, centers, z)
    lab = D.argmin(axis=1)
    return P.weights * D[np.arange(len(P)), lab], lab


def point_cost(p: WeightedPoint, S, m: Metric, z: int = 2, return_index: bool = False):
    """``w(p) * min_s dist(p, s) ** z``; optionally also the argmin center index."""
    C = _locs_of(S, m)
    if len(C) == 0:
        raise ValueError("center set is empty")
    D = m.pow_dist(m.as_locations(p.coords), C, z)[0]
    i = int(D.argmin())
    c = p.weight * float(D[i])
    return (c, i) if return_index else c


def set_cost(P, S, m: Metric, z: int = 2) -> float:
    """Sum over P of ``w(p) * min_s dist(p, s) ** z``."""
    if not isinstance(P, PointSet):
        P = PointSet.from_points(list(P), m)
    C = _locs_of(S, m)
    if len(C) == 0:
        raise ValueError("center set is empty")
    if len(P) == 0:
        return 0.0
    costs, _ = assign(P, C, m, z)
    return float(costs.sum())
