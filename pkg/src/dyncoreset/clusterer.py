"""User-facing dynamic clustering: insert and delete points by id, query k centers."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .core import CostParams, Metric, PointSet, ops
from .epoch import Coreset
from .static import Solution, query_solve, solution_for
from .tree import MrTree


@dataclass
class QueryResult:
    """Centers for the live dataset.

    ``coreset_cost`` is the cost measured on the coreset; ``true_cost`` is the
    cost on the full live dataset and is only filled in for ``exact=True``.
    """

    centers: np.ndarray
    solution: Solution
    coreset_cost: float
    coreset_size: int
    k: int
    true_cost: float | None = None


class Clusterer:
    """Fully dynamic (k, z)-clustering over a maintained coreset.

    >>> c = Clusterer(Metric.euclidean(2), k=2, seed=1)
    >>> a = c.insert([0.0, 0.0]); b = c.insert([5.0, 5.0])
    >>> c.query().coreset_cost
    0.0
    """

    def __init__(self, metric: Metric, k: int | None = None, params: CostParams | None = None,
                 strict: bool = True, **kw):
        if params is None:
            if k is None:
                raise ValueError("give k or params")
            params = CostParams(k=k, **kw)
        elif k is not None or kw:
            raise ValueError("give either params or keyword settings, not both")
        self.params = params
        self.metric = metric
        update_seq, self._query_seq = np.random.SeedSequence(params.seed).spawn(2)
        self.tree = MrTree(params, metric, np.random.default_rng(update_seq), strict=strict)
        self._next_id = 0
        self.n_inserts = 0
        self.n_deletes = 0
        self.update_ns = 0

    def __len__(self) -> int:
        return self.tree.size

    def __contains__(self, pid) -> bool:
        return pid in self.tree.where

    def insert(self, coords, weight: float = 1.0) -> int:
        loc = self.metric.as_locations(coords)
        if len(loc) != 1:
            raise ValueError("insert takes a single point")
        if not weight > 0:
            raise ValueError("weight must be positive")
        pid = self._next_id
        t0 = time.perf_counter_ns()
        self.tree.insert((pid, loc[0], float(weight)))
        self.update_ns += time.perf_counter_ns() - t0
        self._next_id += 1
        self.n_inserts += 1
        return pid

    def insert_many(self, X, weights=None) -> list[int]:
        """Insert a batch of points; an empty clusterer builds its tree in one pass."""
        locs = self.metric.as_locations(X)
        n = len(locs)
        w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
        if len(w) != n:
            raise ValueError("one weight per point")
        if np.any(~(w > 0)):
            raise ValueError("weights must be positive")
        if self.tree.size:
            return [self.insert(x, wi) for x, wi in zip(X, w)]
        ids = np.arange(self._next_id, self._next_id + n)
        t0 = time.perf_counter_ns()
        self.tree._build(PointSet(ids, locs, w))
        self.update_ns += time.perf_counter_ns() - t0
        self._next_id += n
        self.n_inserts += n
        return ids.tolist()

    def delete(self, pid: int) -> None:
        if pid not in self.tree.where:
            raise KeyError(f"unknown or deleted id {pid}")
        t0 = time.perf_counter_ns()
        self.tree.delete(pid)
        self.update_ns += time.perf_counter_ns() - t0
        self.n_deletes += 1

    def coreset(self) -> Coreset:
        return self.tree.root_coreset()

    def points(self) -> PointSet:
        """The live dataset."""
        return self.tree.live_points()

    def query_rng(self, seed: int = 0) -> np.random.Generator:
        # a child of the query stream, so queries never touch the update stream
        seq = np.random.SeedSequence(self._query_seq.entropy, spawn_key=self._query_seq.spawn_key + (seed,))
        return np.random.default_rng(seq)

    def query(self, k: int | None = None, exact: bool = False, seed: int = 0) -> QueryResult:
        if self.tree.size == 0:
            raise ValueError("dataset is empty")
        k = self.params.k if k is None else k
        if k < 1:
            raise ValueError("k must be positive")
        omega = self.coreset().as_pointset()
        sol = query_solve(omega, self.metric, k, self.params.z, self.query_rng(seed),
                          restrict_to_coreset=not self.metric.is_euclidean)
        res = QueryResult(sol.centers, sol, sol.total_cost, len(omega), k)
        if exact:
            res.true_cost = solution_for(self.points(), sol.centers, self.metric, self.params.z).total_cost
        return res

    def stats(self) -> dict:
        t = self.tree
        ins = sum(v[0] for v in t.level_churn.values())
        dels = sum(v[1] for v in t.level_churn.values())
        return {"size": t.size, "updates": self.n_inserts + self.n_deletes, "inserts": self.n_inserts,
                "deletes": self.n_deletes, "epoch_restarts": t.restarts, "rebuilds": t.rebuilds,
                "churn_ins": ins, "churn_del": dels, "height": t.height,
                "coreset_size": len(t.root_coreset()), "ops": ops.total, "update_ns": self.update_ns}
