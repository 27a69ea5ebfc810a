"""Brute-force and Monte-Carlo oracles used to check coresets and solutions."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from itertools import combinations

import numpy as np

from .core import Metric, PointSet
from .epoch import SAMPLED, Coreset
from .static import d2_seeding, local_search, lloyd, solution_for

MAX_SUBSETS = 10 ** 6


def brute_opt(P: PointSet, m: Metric, k: int, z: int = 2, batch: int = 4096):
    """Exact discrete optimum: minimum cost over all k-subsets of P's points.

    Returns ``(cost, center_rows)`` where ``center_rows`` index into P.
    """
    n = len(P)
    if k >= n:
        return 0.0, tuple(range(n))
    if math.comb(n, k) > MAX_SUBSETS:
        raise ValueError(f"C({n}, {k}) subsets exceed the brute-force limit of {MAX_SUBSETS}")
    C = P.weights[:, None] * m.pow_dist(P.locs, P.locs, z)
    best, best_set = math.inf, None
    it = combinations(range(n), k)
    while True:
        chunk = list(_take(it, batch))
        if not chunk:
            break
        S = np.array(chunk, dtype=np.int64)
        costs = C[:, S].min(axis=2).sum(axis=0)
        i = int(costs.argmin())
        if costs[i] < best:
            best, best_set = float(costs[i]), chunk[i]
    return best, tuple(best_set)


def _take(it, n):
    for _ in range(n):
        try:
            yield next(it)
        except StopIteration:
            return


@dataclass
class DistortionReport:
    num_solutions: int
    max_rel_err: float
    mean_rel_err: float
    worst_solution: list
    family_max: dict

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def candidate_solutions(P: PointSet, m: Metric, k: int, z: int, count: int,
                        rng: np.random.Generator) -> list[np.ndarray]:
    """Center sets from three families: uniform k-subsets, D^z seeds, perturbed good solutions."""
    n = len(P)
    kk = min(k, n)
    fam = [count // 3 + (count % 3 > 0), count // 3 + (count % 3 > 1), count // 3]
    out = []
    for _ in range(fam[0]):
        out.append(("uniform", P.locs[rng.choice(n, size=kk, replace=False)]))
    for _ in range(fam[1]):
        out.append(("seeded", d2_seeding(P, m, kk, z, rng).centers))
    if fam[2]:
        base = d2_seeding(P, m, kk, z, rng)
        if kk < n:
            base = local_search(P, m, base, z, 2 * kk, rng)
        good = lloyd(P, m, base, z) if m.is_euclidean else base
        if m.is_euclidean:
            scale = math.sqrt(good.total_cost / max(P.total_weight, 1e-300)) if z == 2 \
                else good.total_cost / max(P.total_weight, 1e-300)
            for _ in range(fam[2]):
                noise = rng.normal(size=good.centers.shape) * scale * rng.uniform(0.05, 1.0)
                out.append(("perturbed", good.centers + noise))
        else:
            for _ in range(fam[2]):
                C = good.centers.copy()
                C[rng.integers(len(C))] = P.locs[rng.integers(n)]
                out.append(("perturbed", C))
    return out


def distortion(P: PointSet, omega, m: Metric, k: int, z: int, trials: int,
               rng: np.random.Generator, solutions=None) -> DistortionReport:
    """Relative cost error of ``omega`` against ``P`` over candidate solutions."""
    if trials < 1:
        raise ValueError("need at least one trial")
    if isinstance(omega, Coreset):
        omega = omega.as_pointset()
    sols = solutions if solutions is not None else candidate_solutions(P, m, k, z, trials, rng)
    errs, fam_max = [], {}
    worst, worst_err = None, -1.0
    for item in sols:
        name, S = item if isinstance(item, tuple) else ("given", item)
        cp = solution_for(P, S, m, z).total_cost
        co = solution_for(omega, S, m, z).total_cost if len(omega) else 0.0
        if cp > 0:
            e = abs(co - cp) / cp
        else:
            e = 0.0 if co == 0 else math.inf
        errs.append(e)
        fam_max[name] = max(fam_max.get(name, 0.0), e)
        if e > worst_err:
            worst, worst_err = S, e
    return DistortionReport(len(errs), float(max(errs)), float(np.mean(errs)),
                            np.asarray(worst).tolist(), fam_max)


def uniform_sample_coreset(G: PointSet, n_c: int, rng: np.random.Generator) -> Coreset:
    """Uniform n_c-subset without replacement, each weight scaled by |G| / n_c."""
    if n_c > len(G):
        raise ValueError(f"sample size {n_c} exceeds group size {len(G)}")
    if n_c < 1:
        raise ValueError("sample size must be positive")
    idx = np.sort(rng.choice(len(G), size=n_c, replace=False))
    S = G.subset(idx)
    return Coreset(S.ids, S.locs, S.weights * (len(G) / n_c), np.full(n_c, SAMPLED, dtype=np.int8),
                   np.full((n_c, 3), -1, dtype=np.int64))


def additive_error_ok(G: PointSet, omega, A_centers, S_list, m: Metric, z: int, eps: float) -> bool:
    """|cost(omega, S) - cost(G, S)| <= eps (cost(G, A) + cost(G, S)) for every S."""
    if isinstance(omega, Coreset):
        omega = omega.as_pointset()
    cga = solution_for(G, A_centers, m, z).total_cost
    for S in S_list:
        cgs = solution_for(G, S, m, z).total_cost
        cos = solution_for(omega, S, m, z).total_cost
        if abs(cos - cgs) > eps * (cga + cgs):
            return False
    return True


def churn_audit(log, n_i: int | None = None, n_d: int | None = None) -> bool:
    """Coreset churn of one epoch: insertions <= n_i + n_d and deletions <= n_d.

    ``log`` is an epoch state (or anything with ``churn_ins``/``churn_del``,
    ``n_i``/``n_d``) or a ``(insertions, deletions)`` pair.
    """
    if isinstance(log, tuple):
        ins, dels = log
    else:
        ins, dels = log.churn_ins, log.churn_del
        n_i = log.n_i if n_i is None else n_i
        n_d = log.n_d if n_d is None else n_d
    return ins <= n_i + n_d and dels <= n_d
