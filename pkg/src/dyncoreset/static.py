"""Static (k, z)-clustering: D^z seeding, swap local search, Lloyd refinement.

All functions take an explicit ``numpy.random.Generator`` and are pure apart
from consuming it.  Ties between equally close centers go to the lowest index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Metric, PointSet, ops


@dataclass
class Solution:
    """A center set together with the induced clustering of a point set.

    ``labels[i]`` is the center index of the i-th input point (the input's own
    row order); ``center_index`` gives, per center, the input row it was taken
    from, or -1 when the center is not an input point (after Lloyd steps).
    """

    centers: np.ndarray
    labels: np.ndarray
    point_cost: np.ndarray
    per_cluster_cost: np.ndarray
    total_cost: float
    center_index: np.ndarray
    ids: np.ndarray | None = None

    @property
    def assignment(self) -> dict[int, int]:
        """Point id to center index."""
        ids = self.ids if self.ids is not None else np.arange(len(self.labels))
        return dict(zip(ids.tolist(), self.labels.tolist()))

    def __len__(self) -> int:
        return len(self.centers)


def solution_for(P: PointSet, centers: np.ndarray, m: Metric, z: int,
                 center_index=None) -> Solution:
    if len(centers) == 0:
        raise ValueError("center set is empty")
    if center_index is None:
        center_index = np.full(len(centers), -1, dtype=np.int64)
    if len(P) == 0:
        return Solution(centers, np.empty(0, dtype=np.int64), np.empty(0), np.zeros(len(centers)), 0.0,
                        np.asarray(center_index), P.ids)
    D = m.pow_dist(P.locs, centers, z)
    lab = D.argmin(axis=1)
    pc = P.weights * D[np.arange(len(P)), lab]
    per = np.bincount(lab, weights=pc, minlength=len(centers))
    return Solution(centers, lab, pc, per, float(per.sum()), np.asarray(center_index, dtype=np.int64), P.ids)


def _pick(scores: np.ndarray, rng: np.random.Generator, cum: np.ndarray | None = None) -> int:
    if cum is None:
        cum = np.cumsum(scores)
    r = rng.random() * cum[-1]
    i = int(np.searchsorted(cum, r, side="right"))
    return min(i, len(cum) - 1)


def d2_seeding(P: PointSet, m: Metric, t: int, z: int, rng: np.random.Generator) -> Solution:
    """k-means++ style seeding with probabilities proportional to ``w(p) * cost(p)``."""
    n = len(P)
    if n == 0:
        raise ValueError("cannot seed an empty point set")
    if t < 1:
        raise ValueError("need at least one center")
    if t >= n:
        idx = np.arange(n)
        return solution_for(P, P.locs, m, z, idx)
    w = P.weights
    chosen = np.zeros(n, dtype=bool)
    first = _pick(w, rng)
    picks = [first]
    chosen[first] = True
    mind = m.pow_dist(P.locs, P.locs[first:first + 1], z)[:, 0]
    for _ in range(1, t):
        scores = w * mind
        scores[chosen] = 0.0
        if scores.sum() <= 0.0:
            # every residual cost is zero: fall back to weight among unchosen points
            scores = np.where(chosen, 0.0, w)
        c = _pick(scores, rng)
        picks.append(c)
        chosen[c] = True
        np.minimum(mind, m.pow_dist(P.locs, P.locs[c:c + 1], z)[:, 0], out=mind)
    idx = np.array(picks, dtype=np.int64)
    return solution_for(P, P.locs[idx], m, z, idx)


def _best_two(D: np.ndarray):
    t = D.shape[1]
    i1 = D.argmin(axis=1)
    rows = np.arange(len(D))
    d1 = D[rows, i1]
    if t == 1:
        return d1, i1, np.full(len(D), np.inf)
    D2 = D.copy()
    D2[rows, i1] = np.inf
    d2 = D2.min(axis=1)
    return d1, i1, d2


def local_search(P: PointSet, m: Metric, sol: Solution, z: int, max_swaps: int,
                 rng: np.random.Generator) -> Solution:
    """Single-swap local search over input points as candidate centers.

    Each attempt draws a candidate by D^z sampling and evaluates swapping it
    against every current center in O(n) via best/second-best distances.
    A swap is kept only when it strictly lowers the total cost.
    """
    if max_swaps <= 0 or len(P) == 0:
        return sol
    t = len(sol.centers)
    cidx = sol.center_index.copy()
    if np.any(cidx < 0):
        raise ValueError("local search needs centers taken from the input points")
    w = P.weights
    D = m.pow_dist(P.locs, P.locs[cidx], z)
    d1, i1, d2 = _best_two(D)
    cur = float(w @ d1)
    cum = np.cumsum(w * d1)
    for _ in range(max_swaps):
        if cur <= 0.0 or cum[-1] <= 0.0:
            break
        c = _pick(None, rng, cum)
        dc = m.pow_dist(P.locs, P.locs[c:c + 1], z)[:, 0]
        base = np.minimum(d1, dc)
        gain = w * (np.minimum(d2, dc) - base)
        new_cost = float(w @ base) + np.bincount(i1, weights=gain, minlength=t)
        ops.steps += 3 * len(P)
        s = int(new_cost.argmin())
        if new_cost[s] < cur * (1.0 - 1e-12):
            cidx[s] = c
            D[:, s] = dc
            d1, i1, d2 = _best_two(D)
            ops.steps += len(P) * t
            cur = float(w @ d1)
            cum = np.cumsum(w * d1)
    return solution_for(P, P.locs[cidx], m, z, cidx)


def default_swaps(k: int) -> int:
    """O(k log log k) swap budget: 2k * ceil(log2(log2(k) + 2))."""
    return 2 * k * math.ceil(math.log2(math.log2(k) + 2))


def bicriteria_init(P: PointSet, m: Metric, k: int, z: int, rng: np.random.Generator,
                    max_swaps: int | None = None) -> Solution:
    """Constant-factor solution with ``min(2k, |P|)`` centers."""
    if len(P) == 0:
        raise ValueError("empty point set")
    t = min(2 * k, len(P))
    sol = d2_seeding(P, m, t, z, rng)
    if t == len(P):
        return sol
    return local_search(P, m, sol, z, default_swaps(k) if max_swaps is None else max_swaps, rng)


def lloyd(P: PointSet, m: Metric, sol: Solution, z: int, max_rounds: int = 20,
          tol: float = 1e-4) -> Solution:
    """Weighted centroid updates (Euclidean, z = 2) until improvement < tol."""
    if not m.is_euclidean or z != 2 or len(P) == 0:
        return sol
    cur = sol
    for _ in range(max_rounds):
        t = len(cur.centers)
        C = cur.centers.copy()
        wsum = np.bincount(cur.labels, weights=P.weights, minlength=t)
        for j in range(P.locs.shape[1]):
            s = np.bincount(cur.labels, weights=P.weights * P.locs[:, j], minlength=t)
            nz = wsum > 0
            C[nz, j] = s[nz] / wsum[nz]
        ops.steps += len(P) * P.locs.shape[1]
        nxt = solution_for(P, C, m, z)
        if nxt.total_cost >= cur.total_cost:
            break
        improvement = (cur.total_cost - nxt.total_cost) / max(cur.total_cost, 1e-300)
        cur = nxt
        if improvement < tol:
            break
    return cur


def query_solve(omega: PointSet, m: Metric, k: int, z: int, rng: np.random.Generator,
                restrict_to_coreset: bool = False, max_swaps: int | None = None,
                refine: bool = True) -> Solution:
    """Solve (k, z)-clustering on a (weighted) coreset.

    Matrix mode always restricts centers to the coreset points.
    """
    if len(omega) == 0:
        raise ValueError("empty coreset")
    sol = d2_seeding(omega, m, k, z, rng)
    if k < len(omega):
        sol = local_search(omega, m, sol, z, default_swaps(k) if max_swaps is None else max_swaps, rng)
    if refine and m.is_euclidean and not restrict_to_coreset:
        sol = lloyd(omega, m, sol, z)
    return sol
