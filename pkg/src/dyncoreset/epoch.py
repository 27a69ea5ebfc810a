"""One epoch of the dynamic coreset: partition into rings and groups, lazily
sized uniform samples, and an incrementally maintained coreset.

An epoch starts from a point set ``P0``; it then absorbs at most ``k`` updates
(insertions and deletions together).  Every update returns the list of
changes it causes in the coreset, which is what the merge-and-reduce tree
forwards to the parent node.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .core import CostParams, Metric, PointSet, WeightedPoint, ops
from .ostree import RandomOrder
from .static import Solution, bicriteria_init, solution_for

INSERTED, SMALL, CLOSE, SAMPLED = 0, 1, 2, 3
_KIND_NAMES = {INSERTED: "inserted", SMALL: "small", CLOSE: "close", SAMPLED: "sampled"}

# per-point status inside P0
ST_E0, ST_SMALL, ST_CLOSE, ST_LARGE = 0, 1, 2, 3


class NeedsNewEpoch(Exception):
    """The epoch has absorbed its k updates; the caller must re-initialize."""


class InvariantError(RuntimeError):
    pass


_synthetic_ids = itertools.count(-1, -1)


def _default_id_source() -> int:
    return next(_synthetic_ids)


@dataclass
class Coreset:
    """Immutable weighted point set with per-entry provenance."""

    ids: np.ndarray
    locs: np.ndarray
    weights: np.ndarray
    kinds: np.ndarray
    tags: np.ndarray

    def __len__(self) -> int:
        return len(self.ids)

    @classmethod
    def empty(cls, metric: Metric) -> "Coreset":
        return cls(np.empty(0, dtype=np.int64), metric.empty_locations(), np.empty(0),
                   np.empty(0, dtype=np.int8), np.empty((0, 3), dtype=np.int64))

    @classmethod
    def from_pointset(cls, P: PointSet, kind: int = INSERTED) -> "Coreset":
        n = len(P)
        return cls(P.ids.copy(), P.locs.copy(), P.weights.copy(), np.full(n, kind, dtype=np.int8),
                   np.full((n, 3), -1, dtype=np.int64))

    def as_pointset(self) -> PointSet:
        return PointSet(self.ids, self.locs, self.weights)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def provenance(self, i: int) -> tuple:
        kind = int(self.kinds[i])
        if kind == CLOSE:
            return ("close", int(self.tags[i, 0]))
        if kind == SAMPLED:
            return ("sampled",) + tuple(int(x) for x in self.tags[i])
        return (_KIND_NAMES[kind],)

    def entries(self) -> dict:
        """id -> (weight, provenance)."""
        return {int(self.ids[i]): (float(self.weights[i]), self.provenance(i)) for i in range(len(self))}

    @staticmethod
    def concat(parts, metric: Metric) -> "Coreset":
        parts = [p for p in parts if len(p)]
        if not parts:
            return Coreset.empty(metric)
        return Coreset(*(np.concatenate([getattr(p, f) for p in parts])
                         for f in ("ids", "locs", "weights", "kinds", "tags")))


@dataclass
class DeltaOp:
    op: str  # "+" or "-"
    id: int
    loc: object = None
    weight: float = 0.0
    prov: tuple = ()


def replay(entries: dict, delta) -> dict:
    """Apply a coreset delta to an ``id -> (weight, provenance)`` map."""
    for d in delta:
        if d.op == "-":
            del entries[d.id]
        else:
            if d.id in entries:
                raise KeyError(f"coreset already holds id {d.id}")
            entries[d.id] = (d.weight, d.prov)
    return entries


def coreset_size(k: int, epsilon: float, n: int, delta: float, euclidean_variant: bool = False,
                 C: float = 1.0, scale: float = 1.0) -> int:
    """Per-group sample size n_c.

    ``max(ceil(10 k / eps^2), ceil(C k eps^-2 log2(n + 2) log2(k / (delta eps) + 2)))``;
    the Euclidean variant replaces the log n factor by ``eps^-2``.  ``scale``
    multiplies the result (1.0 keeps the theory constants).
    """
    floor = math.ceil(10 * k / epsilon ** 2)
    polylog = math.log2(k / (delta * epsilon) + 2)
    if euclidean_variant:
        main = math.ceil(C * k * epsilon ** -4 * polylog)
    else:
        main = math.ceil(C * k * epsilon ** -2 * math.log2(n + 2) * polylog)
    nc = max(floor, main)
    if scale != 1.0:
        nc = math.ceil(scale * nc)
    return max(1, nc)


def _unique_rows(a: np.ndarray):
    """Lexicographically sorted unique rows of a small-integer matrix, with inverse and counts."""
    lo = a.min(axis=0)
    span = a.max(axis=0) - lo + 1
    code = np.zeros(len(a), dtype=np.int64)
    for c in range(a.shape[1]):
        code = code * span[c] + (a[:, c] - lo[c])
    _, first, inv, cnt = np.unique(code, return_index=True, return_inverse=True, return_counts=True)
    return a[first], inv.reshape(-1), cnt


class Ring:
    """A ring of a large group; members are the live points whose ``ring_of`` is this ring."""

    __slots__ = ("key", "index", "size", "size_at_placement", "group")

    def __init__(self, key, index, size, group):
        self.key = key
        self.index = index
        self.size = size
        self.size_at_placement = size
        self.group = group

    def __len__(self):
        return self.size


class Group:
    # ``order`` stays None until the first update touches the group
    __slots__ = ("key", "index", "rings", "order", "size", "c", "initially_large", "issued")

    def __init__(self, key, index, size, initially_large):
        self.key = key
        self.index = index
        self.rings = set()
        self.order = None
        self.size = size
        self.c = size
        self.initially_large = initially_large
        self.issued = None


def _wclass(w: np.ndarray) -> np.ndarray:
    # floor(log2 w), exact for floats
    return np.frexp(w)[1].astype(np.int64) - 1


def _ring_index(u: np.ndarray, thr: float) -> np.ndarray:
    """j with 2^(j-1) thr <= u < 2^j thr."""
    j = np.frexp(u / thr)[1].astype(np.int64)
    lo = np.ldexp(thr, j - 1)
    hi = np.ldexp(thr, j)
    j = np.where(u < lo, j - 1, j)
    return np.where(u >= hi, j + 1, j)


class EpochState:
    """Data structure for one epoch (see module docstring).

    ``params.epsilon`` is the accuracy used at this level.  ``new_id`` mints
    ids for the weighted center entries that stand in for close points.
    """

    def __init__(self, P0: PointSet, params: CostParams, metric: Metric, rng: np.random.Generator,
                 new_id=None, strict: bool = True, allow_empty: bool = False):
        if len(P0) == 0 and not allow_empty:
            raise ValueError("cannot start an epoch on an empty point set")
        self.params = params
        self.k = params.k
        self.z = params.z
        self.eps = params.epsilon
        self.metric = metric
        self.rng = rng
        self.strict = strict
        self._new_id = new_id or _default_id_source
        self.inserted: dict[int, tuple] = {}
        self.budget_used = 0
        self.n_i = 0
        self.n_d = 0
        self.churn_ins = 0
        self.churn_del = 0
        self.ring_moves = 0
        self.estimate_refreshes = 0
        self.estimate_decreases = 0
        self._init(P0)

    # -- initialization -------------------------------------------------

    def _init(self, P0: PointSet) -> None:
        order = np.argsort(P0.ids, kind="stable")
        P0 = P0.subset(order)
        if len(P0) > 1 and np.any(np.diff(P0.ids) == 0):
            raise ValueError("duplicate ids in P0")
        n0 = len(P0)
        self.P0 = P0
        self.n0 = n0
        self.ids = P0.ids
        self.w = P0.weights
        self.deleted = np.zeros(n0, dtype=bool)
        self.cw = np.zeros(n0)
        self.status = np.full(n0, ST_SMALL, dtype=np.int8)
        self.grp_of = np.full(n0, -1, dtype=np.int64)
        self.ring_of = np.full(n0, -1, dtype=np.int64)
        self.rkey = np.zeros(n0)
        self.groups: dict[tuple, Group] = {}
        self.group_list: list[Group] = []
        self.rings: list[Ring | None] = []
        self.n_c = coreset_size(self.k, self.eps, max(n0, 1), self.params.delta, scale=self.params.coreset_scale)
        self.large_cutoff = (self.params.large_group_scale * max(1.0, math.log2(max(n0, 1)))
                             * self.n_c / self.eps)
        self.property_violations: list[str] = []
        self.initial_group_count = 0
        self._init_rings = (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64))
        if n0 == 0:
            self.A = None
            self.delta_avg = 0.0
            self.e0_ids = np.empty(0, dtype=np.int64)
            self.center_ids = np.empty(0, dtype=np.int64)
            self.close_w = np.empty(0)
            self.close_n = np.empty(0, dtype=np.int64)
            self.cost = np.empty(0)
            self.labels = np.empty(0, dtype=np.int64)
            self.ring_j = np.empty(0, dtype=np.int64)
            self.wcls = np.empty(0, dtype=np.int64)
            return
        ops.steps += 8 * n0
        A = bicriteria_init(P0, self.metric, self.k, self.z, self.rng)
        self.A = A
        cost, lab = A.point_cost, A.labels
        self.cost, self.labels = cost, lab
        ne = min(self.k, n0)
        top = np.lexsort((self.ids, -cost))[:ne]
        e0 = np.zeros(n0, dtype=bool)
        e0[top] = True
        self.e0_ids = self.ids[np.sort(top)]
        rest = ~e0
        nr = int(rest.sum())
        self.delta_avg = float(cost[rest].sum() / nr) if nr else 0.0
        thr = self.eps * self.delta_avg
        wcls = _wclass(self.w)
        self.wcls = wcls
        close = rest & (cost <= thr)
        far = rest & ~close
        j = np.zeros(n0, dtype=np.int64)
        if far.any():
            u = cost[far] / np.ldexp(1.0, wcls[far])
            j[far] = _ring_index(u, thr)
        self.ring_j = j
        self.status[e0] = ST_E0
        self.status[close] = ST_CLOSE

        t = len(A.centers)
        self.center_ids = np.array([self._new_id() for _ in range(t)], dtype=np.int64)
        self.close_w = np.bincount(lab[close], weights=self.w[close], minlength=t)
        self.close_n = np.bincount(lab[close], minlength=t)

        far_idx = np.nonzero(far)[0]
        if len(far_idx):
            self._build_groups(far_idx, lab, j, wcls)
        small = (self.status == ST_E0) | (self.status == ST_SMALL)
        self.cw[small] = self.w[small]
        if self.strict and self.property_violations:
            raise InvariantError("; ".join(self.property_violations))

    def _build_groups(self, far_idx, lab, j, wcls):
        # ring key (i, j, w) and group key (j, b, w)
        rk = np.stack([lab[far_idx], j[far_idx], wcls[far_idx]], axis=1)
        ring_keys, ring_inv, ring_size = _unique_rows(rk)
        b = np.frexp(ring_size)[1].astype(np.int64) - 1
        gk = np.stack([ring_keys[:, 1], b, ring_keys[:, 2]], axis=1)
        group_keys, ring_grp, _ = _unique_rows(gk)
        ng = len(group_keys)
        gsize = np.bincount(ring_grp, weights=ring_size, minlength=ng).astype(np.int64)
        self.initial_group_count = ng
        self._init_rings = (ring_size, ring_grp)
        pt_grp = ring_grp[ring_inv]
        glarge = gsize > self.large_cutoff
        for g_i, key in enumerate(group_keys.tolist()):
            g = Group(tuple(key), g_i, int(gsize[g_i]), bool(glarge[g_i]))
            self.groups[g.key] = g
            self.group_list.append(g)
        self._check_initial_property(far_idx, pt_grp, ring_inv, ng)
        self.grp_of[far_idx] = pt_grp
        large_pt = glarge[pt_grp]
        self.status[far_idx] = np.where(large_pt, ST_LARGE, ST_SMALL)
        if not glarge.any():
            return
        # rings of large groups, numbered in key order
        lr = np.nonzero(glarge[ring_grp])[0]
        rid = np.full(len(ring_keys), -1, dtype=np.int64)
        rid[lr] = np.arange(len(lr))
        for r_i in lr.tolist():
            g = self.group_list[ring_grp[r_i]]
            ring = Ring(tuple(ring_keys[r_i].tolist()), len(self.rings), int(ring_size[r_i]), g)
            self.rings.append(ring)
            g.rings.add(ring)
        mem = far_idx[large_pt]
        self.ring_of[mem] = rid[ring_inv[large_pt]]
        keys = self.rng.random(len(mem))
        self.rkey[mem] = keys
        self._order_seed = int(self.rng.integers(2 ** 62))
        # initial windows: first min(n_c, |G|) members by (key, id) within each group
        grp = pt_grp[large_pt]
        o = np.lexsort((self.ids[mem], keys, grp))
        grp_sorted = grp[o]
        start = np.searchsorted(grp_sorted, grp_sorted, side="left")
        rank = np.arange(len(o)) - start
        c = gsize[grp_sorted].astype(float)
        div = np.minimum(self.n_c, gsize[grp_sorted])
        win = rank < div
        sel = mem[o][win]
        self.cw[sel] = self.w[sel] * c[win] / div[win]
        for g in self.group_list:
            if g.initially_large:
                g.issued = (g.c, self._div(g))

    def _order(self, g: Group) -> RandomOrder:
        """Random order of ``g``, built from the stored keys on first use."""
        if g.order is None:
            mem = np.nonzero((self.grp_of == g.index) & (self.status == ST_LARGE) & ~self.deleted)[0]
            g.order = RandomOrder(zip(zip(self.rkey[mem].tolist(), self.ids[mem].tolist()), mem.tolist()),
                                  seed=self._order_seed + g.index)
        return g.order

    def _ring_members(self, ring: Ring) -> list:
        live = np.nonzero((self.ring_of == ring.index) & ~self.deleted)[0]
        ops.steps += len(live)
        return live.tolist()

    def _check_initial_property(self, far_idx, pt_grp, pt_ring, ngroups):
        """Both clauses of the group property, for every group at epoch start."""
        u = self.cost[far_idx] / np.ldexp(1.0, self.wcls[far_idx])
        gmax = np.full(ngroups, -np.inf)
        gmin = np.full(ngroups, np.inf)
        np.maximum.at(gmax, pt_grp, u)
        np.minimum.at(gmin, pt_grp, u)
        ring_cost = np.bincount(pt_ring, weights=u)
        ring_grp = np.zeros(len(ring_cost), dtype=np.int64)
        ring_grp[pt_ring] = pt_grp
        rmax = np.full(ngroups, -np.inf)
        rmin = np.full(ngroups, np.inf)
        np.maximum.at(rmax, ring_grp, ring_cost)
        np.minimum.at(rmin, ring_grp, ring_cost)
        tol = 1 + 1e-9
        for g_i in np.nonzero(gmax > 2 * gmin * tol)[0].tolist():
            self.property_violations.append(f"group {g_i}: point cost ratio {gmax[g_i] / gmin[g_i]:.3g} > 2")
        for g_i in np.nonzero(rmax > 8 * rmin * tol)[0].tolist():
            self.property_violations.append(f"group {g_i}: cluster cost ratio {rmax[g_i] / rmin[g_i]:.3g} > 8")

    # -- sampled windows ------------------------------------------------

    def _div(self, g: Group) -> int:
        return min(self.n_c, g.size)

    def _sample_weight(self, g: Group, idx: int) -> float:
        return float(self.w[idx] * g.c / self._div(g))

    def _emit_in(self, idx, weight, prov, delta):
        self.cw[idx] = weight
        loc = self.P0.locs[idx]
        delta.append(DeltaOp("+", int(self.ids[idx]), loc, weight, prov))

    def _emit_out(self, idx, delta):
        self.cw[idx] = 0.0
        delta.append(DeltaOp("-", int(self.ids[idx])))

    def _sync(self, g: Group, lo: int, hi: int, delta) -> None:
        """Make ranks [lo, hi) of ``g`` agree with the current window and weights."""
        div = self._div(g)
        prov = ("sampled",) + g.key
        for r, (_, idx) in enumerate(self._order(g).range(lo, hi), start=max(lo, 0)):
            want = self._sample_weight(g, idx) if r < div else 0.0
            if self.cw[idx] != want:
                if self.cw[idx] > 0:
                    self._emit_out(idx, delta)
                if want > 0:
                    self._emit_in(idx, want, prov, delta)
        g.issued = (g.c, div)

    def _issue_window(self, g: Group, delta, hi: int | None = None) -> None:
        div = self._div(g)
        self._sync(g, 0, max(div, hi or 0), delta)

    def _after_removal(self, g: Group, removed_from_window: int, old_div: int, delta) -> None:
        div = self._div(g)
        if g.issued != (g.c, div):
            self.estimate_refreshes += g.issued[0] != g.c
            self._issue_window(g, delta, hi=old_div)
        elif removed_from_window:
            self._sync(g, div - removed_from_window, div, delta)

    # -- updates --------------------------------------------------------

    def _find(self, pid: int) -> int:
        i = int(np.searchsorted(self.ids, pid))
        if i < self.n0 and self.ids[i] == pid and not self.deleted[i]:
            return i
        return -1

    def __contains__(self, pid) -> bool:
        return pid in self.inserted or self._find(pid) >= 0

    def _spend(self) -> None:
        if self.budget_used >= self.k:
            raise NeedsNewEpoch(f"epoch budget of {self.k} updates exhausted")
        self.budget_used += 1

    def insert(self, p: WeightedPoint | tuple) -> list:
        if isinstance(p, WeightedPoint):
            pid, loc, weight = p.id, self.metric.as_locations(p.coords)[0], p.weight
        else:
            pid, loc, weight = p
        if pid in self:
            raise ValueError(f"id {pid} is already present")
        if not weight > 0:
            raise ValueError("weight must be positive")
        self._spend()
        self.n_i += 1
        self.inserted[pid] = (loc, weight)
        self.churn_ins += 1
        ops.steps += 1
        return [DeltaOp("+", pid, loc, weight, ("inserted",))]

    def delete(self, pid: int) -> list:
        pid = int(pid)
        in_i = pid in self.inserted
        idx = -1 if in_i else self._find(pid)
        if not in_i and idx < 0:
            raise KeyError(f"unknown id {pid}")
        self._spend()
        self.n_d += 1
        ops.steps += 1
        delta: list = []
        if in_i:
            del self.inserted[pid]
            delta.append(DeltaOp("-", pid))
        else:
            st = self.status[idx]
            if st == ST_LARGE:
                self._order(self.group_list[self.grp_of[idx]])
            self.deleted[idx] = True
            if st == ST_E0 or st == ST_SMALL:
                self._emit_out(idx, delta)
            elif st == ST_CLOSE:
                self._delete_close(idx, delta)
            else:
                self._delete_large(idx, delta)
        outs = sum(d.op == "-" for d in delta)
        self.churn_del += outs
        self.churn_ins += len(delta) - outs
        return delta

    def _delete_close(self, idx, delta):
        i = self.labels[idx]
        cid = int(self.center_ids[i])
        delta.append(DeltaOp("-", cid))
        self.close_n[i] -= 1
        self.close_w[i] -= self.w[idx]
        if self.close_n[i] > 0:
            delta.append(DeltaOp("+", cid, self.A.centers[i], float(self.close_w[i]), ("close", int(i))))

    def _delete_large(self, idx, delta):
        ring = self.rings[self.ring_of[idx]]
        g = ring.group
        old_div = self._div(g)
        g.order.delete((self.rkey[idx], int(self.ids[idx])))
        ring.size -= 1
        g.size -= 1
        was_in = self.cw[idx] > 0
        if was_in:
            self._emit_out(idx, delta)
        self._after_removal(g, int(was_in), old_div, delta)
        b = g.key[1]
        if len(ring) == 0:
            g.rings.discard(ring)
            self.rings[self.ring_of[idx]] = None
        elif b >= 3 and len(ring) == 2 ** (b - 3):
            self._move_ring(ring, delta)

    def _move_ring(self, ring: Ring, delta) -> None:
        src = ring.group
        jj, b, wc = src.key
        members = self._ring_members(ring)
        old_div = self._div(src)
        removed_win = 0
        for idx in members:
            src.order.delete((self.rkey[idx], int(self.ids[idx])))
            if self.cw[idx] > 0:
                self._emit_out(idx, delta)
                removed_win += 1
        r = len(members)
        src.size -= r
        src.rings.discard(ring)
        self.ring_moves += 1
        if src.size <= (1 - self.eps) * src.c:
            self.estimate_decreases += 1
            if self.strict:
                raise InvariantError(f"size estimate of group {src.key} would decrease "
                                     f"({src.size} <= (1-eps) * {src.c})")
            src.c = src.size
        if src.size > 0:
            self._after_removal(src, removed_win, old_div, delta)

        dkey = (jj, b - 3, wc)
        dst = self.groups.get(dkey)
        if dst is None:
            dst = Group(dkey, len(self.group_list), 0, False)
            self.groups[dkey] = dst
            self.group_list.append(dst)
        old_dst_div = self._div(dst) if dst.initially_large else 0
        dst.size += r
        ops.steps += r
        if not dst.initially_large:
            self.rings[ring.index] = None
            for idx in members:
                self.status[idx] = ST_SMALL
                self.grp_of[idx] = dst.index
                self.ring_of[idx] = -1
                self._emit_in(idx, float(self.w[idx]), ("small",), delta)
            return
        self._order(dst)
        ring.group = dst
        ring.size_at_placement = r
        dst.rings.add(ring)
        keys = self.rng.random(r)
        for idx, key in zip(members, keys.tolist()):
            self.rkey[idx] = key
            self.grp_of[idx] = dst.index
            dst.order.insert((key, int(self.ids[idx])), idx)
        if (1 + self.eps) * dst.c <= dst.size:
            dst.c = dst.size
        div = self._div(dst)
        if dst.issued != (dst.c, div):
            self.estimate_refreshes += dst.issued[0] != dst.c
            self._issue_window(dst, delta, hi=old_dst_div + r)
            return
        prov = ("sampled",) + dst.key
        for idx in members:
            if dst.order.rank((self.rkey[idx], int(self.ids[idx]))) < div:
                self._emit_in(idx, self._sample_weight(dst, idx), prov, delta)
        for _, q in dst.order.range(div, div + r):
            if self.cw[q] > 0:
                self._emit_out(q, delta)

    # -- extraction -----------------------------------------------------

    def extract(self) -> Coreset:
        m = self.metric
        parts = []
        mask = self.cw > 0
        if mask.any():
            idx = np.nonzero(mask)[0]
            kinds = np.where(self.status[idx] == ST_LARGE, SAMPLED, SMALL).astype(np.int8)
            tags = np.full((len(idx), 3), -1, dtype=np.int64)
            samp = kinds == SAMPLED
            if samp.any():
                keys = np.array([self.group_list[g].key for g in self.grp_of[idx[samp]]], dtype=np.int64)
                tags[samp] = keys
            parts.append(Coreset(self.ids[idx], self.P0.locs[idx], self.cw[idx], kinds, tags))
        live = np.nonzero(self.close_n > 0)[0]
        if len(live):
            tags = np.full((len(live), 3), -1, dtype=np.int64)
            tags[:, 0] = live
            parts.append(Coreset(self.center_ids[live], self.A.centers[live], self.close_w[live].copy(),
                                 np.full(len(live), CLOSE, dtype=np.int8), tags))
        if self.inserted:
            ids = np.fromiter(self.inserted.keys(), dtype=np.int64, count=len(self.inserted))
            vals = list(self.inserted.values())
            locs = np.array([v[0] for v in vals])
            if m.is_euclidean:
                locs = locs.reshape(len(vals), m.d)
            else:
                locs = locs.astype(np.int64)
            ws = np.array([v[1] for v in vals], dtype=float)
            parts.append(Coreset(ids, locs, ws, np.full(len(ids), INSERTED, dtype=np.int8),
                                 np.full((len(ids), 3), -1, dtype=np.int64)))
        ops.steps += int(mask.sum()) + len(self.inserted)
        return Coreset.concat(parts, m)

    # -- introspection --------------------------------------------------

    @property
    def e0_set(self) -> set:
        return set(self.e0_ids.tolist())

    def g_small_ids(self) -> set:
        live = ~self.deleted
        return set(self.ids[live & ((self.status == ST_SMALL) | (self.status == ST_E0))].tolist())

    def g_close(self) -> dict:
        live = ~self.deleted & (self.status == ST_CLOSE)
        out: dict[int, set] = {}
        for i, pid in zip(self.labels[live].tolist(), self.ids[live].tolist()):
            out.setdefault(i, set()).add(pid)
        return out

    def large_groups(self) -> list[Group]:
        return [g for g in self.group_list if g.initially_large]

    def group_members(self, g: Group) -> np.ndarray:
        """P0 row indices currently in group ``g`` (large groups only)."""
        return np.array(sorted(v for _, v in self._order(g)), dtype=np.int64)

    def nonempty_group_count(self) -> int:
        return self.initial_group_count

    def dump(self) -> str:
        """JSON table of groups for inspection."""
        rows = []
        for g in self.group_list:
            if g.initially_large:
                sizes = sorted((len(r) for r in g.rings), reverse=True)
            elif g.index < self.initial_group_count:
                rs, rg = self._init_rings
                sizes = sorted(rs[rg == g.index].tolist(), reverse=True)
            else:
                sizes = []
            rows.append({"key": list(g.key), "initially_large": g.initially_large, "size": g.size,
                         "size_estimate": g.c if g.initially_large else None,
                         "order_size": len(g.order) if g.order is not None else 0,
                         "ring_sizes": [int(s) for s in sizes]})
        return json.dumps({"n0": self.n0, "n_c": self.n_c, "delta": self.delta_avg,
                           "budget_used": self.budget_used, "groups": rows})

    def audit(self) -> list[str]:
        """Structural invariant violations (empty list when healthy)."""
        bad = list(self.property_violations)
        if self.budget_used > self.k:
            bad.append(f"budget {self.budget_used} > k={self.k}")
        live = ~self.deleted
        thr = self.eps * self.delta_avg
        close = live & (self.status == ST_CLOSE)
        if np.any(self.cost[close] > thr * (1 + 1e-9) + 1e-300):
            bad.append("close point above eps * Delta")
        if np.any(self.close_n < 0):
            bad.append("negative close count")
        counts = np.bincount(self.status[live], minlength=4)
        if counts.sum() != self.n0 - int(self.deleted.sum()):
            bad.append("partition does not cover P0 minus D")
        if self.n0:
            bound = max(math.log2(self.n0 / self.eps), 1.0) ** 3
            if self.nonempty_group_count() > bound:
                bad.append(f"{self.nonempty_group_count()} groups > log2^3(n/eps) = {bound:.0f}")
        for g in self.large_groups():
            ring_total = sum(len(r) for r in g.rings)
            n_ord = len(self._order(g))
            if not (ring_total == g.size == n_ord):
                bad.append(f"group {g.key}: ring total {ring_total}, size {g.size}, order {n_ord}")
            b = g.key[1]
            for r in g.rings:
                if not 2.0 ** (b - 3) < len(r) <= 2 ** (b + 1):
                    bad.append(f"ring {r.key} of size {len(r)} outside band of b={b}")
            if g.size and not ((1 - self.eps) * g.size <= g.c * (1 + 1e-12) and g.c * (1 - self.eps) < g.size):
                bad.append(f"group {g.key}: estimate {g.c} far from size {g.size}")
        if np.any(self.cw[~live] != 0):
            bad.append("deleted point still in coreset")
        if np.any(self.cw[live & ((self.status == ST_SMALL) | (self.status == ST_E0))] <= 0):
            bad.append("small point missing from coreset")
        if np.any(self.cw[live & (self.status == ST_CLOSE)] != 0):
            bad.append("close point carries its own coreset weight")
        if self.estimate_decreases:
            bad.append(f"size estimate decreased {self.estimate_decreases} times")
        return bad


def init_epoch(P0: PointSet, params: CostParams, m: Metric, rng: np.random.Generator, **kw) -> EpochState:
    return EpochState(P0, params, m, rng, **kw)


def epoch_insert(st: EpochState, p) -> list:
    return st.insert(p)


def epoch_delete(st: EpochState, pid: int) -> list:
    return st.delete(pid)


def extract_coreset(st: EpochState) -> Coreset:
    return st.extract()


@dataclass
class PropertyReport:
    ok: bool
    point_ratio: float
    cluster_ratio: float
    violations: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def check_property(G: PointSet, A, m: Metric, z: int = 2) -> PropertyReport:
    """Does the group satisfy the two-clause group property against centers ``A``?

    (a) all point costs within a factor 2, (b) all non-empty per-cluster costs
    within a factor 8.  Weights are used as given, so pass normalized weights.
    """
    if len(G) == 0:
        return PropertyReport(True, 1.0, 1.0)
    centers = A.centers if isinstance(A, Solution) else A
    sol = solution_for(G, centers, m, z)
    pc = sol.point_cost
    per = sol.per_cluster_cost[np.bincount(sol.labels, minlength=len(centers)) > 0]
    pr = _ratio(pc.max(), pc.min())
    cr = _ratio(per.max(), per.min())
    viol = []
    if pr > 2 * (1 + 1e-9):
        viol.append(f"(a) point cost ratio {pr:.4g} > 2")
    if cr > 8 * (1 + 1e-9):
        viol.append(f"(b) cluster cost ratio {cr:.4g} > 8")
    return PropertyReport(not viol, pr, cr, viol)


def _ratio(hi, lo):
    if hi == 0:
        return 1.0
    return math.inf if lo == 0 else float(hi / lo)


def validate_bicriteria_stability(P0: PointSet, A: Solution, k: int, z: int, m: Metric,
                                  rng: np.random.Generator, exhaustive_limit: int = 14,
                                  trials: int = 100) -> dict:
    """Worst ratio cost(P0 \\ D, A) / opt_k(P0 \\ D) over deletion sets |D| <= k.

    Exhaustive over all D when |P0| <= ``exhaustive_limit``, otherwise over
    ``trials`` random D.  The chain of inequalities behind the bound is
    checked link by link against brute-force optima.
    """
    from .oracle import brute_opt

    n = len(P0)
    full_cost = float(solution_for(P0, A.centers, m, z).total_cost)
    opt2k, _ = brute_opt(P0, m, min(2 * k, n), z)
    c = _ratio(full_cost, opt2k) if full_cost > 0 else 1.0
    if n <= exhaustive_limit:
        sets = [D for s in range(0, min(k, n) + 1) for D in combinations(range(n), s)]
    else:
        sets = [tuple(sorted(rng.choice(n, size=int(rng.integers(0, min(k, n) + 1)), replace=False).tolist()))
                for _ in range(trials)]
    worst, worst_D, flagged, chain_bad = 1.0, (), [], []
    tol = 1e-9
    for D in sets:
        keep = np.ones(n, dtype=bool)
        keep[list(D)] = False
        rest = P0.subset(keep)
        if len(rest) == 0:
            continue
        cost_a = float(solution_for(rest, A.centers, m, z).total_cost)
        opt_k, opt_idx = brute_opt(rest, m, min(k, len(rest)), z)
        # chain: cost(P\D, A) <= cost(P, A) <= c opt2k(P) <= c cost(P, optk(P\D) u D) <= c optk(P\D)
        keep_idx = np.nonzero(keep)[0]
        union = np.concatenate([keep_idx[list(opt_idx)], np.array(D, dtype=np.int64)])
        cost_union = float(solution_for(P0, P0.locs[union], m, z).total_cost)
        links = [cost_a <= full_cost * (1 + tol) + tol,
                 full_cost <= c * opt2k * (1 + tol) + tol,
                 opt2k <= cost_union * (1 + tol) + tol,
                 cost_union <= opt_k * (1 + tol) + tol]
        if not all(links):
            chain_bad.append((D, links))
        if opt_k == 0:
            if cost_a > 0:
                flagged.append(D)
                worst, worst_D = math.inf, D
            continue
        r = cost_a / opt_k
        if r > worst:
            worst, worst_D = r, D
    return {"max_ratio": worst, "worst_D": list(worst_D), "num_sets": len(sets), "c": c,
            "opt_2k": opt2k, "cost_A": full_cost, "zero_opt_flagged": [list(d) for d in flagged],
            "chain_violations": [list(d) for d, _ in chain_bad]}
