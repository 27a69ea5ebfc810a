"""Merge-and-reduce tree whose internal nodes each run an epoch over the
union of their children's coresets.

Leaves hold at most ``k`` raw points.  A change at a leaf travels upward as a
coreset delta; a node whose epoch budget runs out restarts together with all
of its ancestors.  When the dataset size leaves the band ``[n_lo, n_hi]`` the
whole tree is rebuilt.
"""
from __future__ import annotations

import dataclasses
import heapq
import json
import math
from collections import defaultdict

import numpy as np

from .core import CostParams, Metric, PointSet, WeightedPoint, ops
from .epoch import Coreset, DeltaOp, EpochState, NeedsNewEpoch, INSERTED


class MrNode:
    __slots__ = ("level", "left", "right", "parent", "points", "leaf_index", "epoch",
                 "restarts", "sub_ins", "sub_del", "recv_ins", "recv_del")

    def __init__(self, level: int, parent=None):
        self.level = level
        self.left = None
        self.right = None
        self.parent = parent
        self.points: dict | None = {} if level == 0 else None
        self.leaf_index = -1
        self.epoch: EpochState | None = None
        self.restarts = 0
        self._reset_counters()

    def _reset_counters(self):
        self.sub_ins = self.sub_del = 0
        self.recv_ins = self.recv_del = 0

    @property
    def is_leaf(self) -> bool:
        return self.level == 0

    def out_coreset(self, metric: Metric) -> Coreset:
        if self.is_leaf:
            return _leaf_coreset(self.points, metric)
        if self.epoch is None:
            return Coreset.empty(metric)
        return self.epoch.extract()


def _leaf_coreset(points: dict, metric: Metric) -> Coreset:
    n = len(points)
    if n == 0:
        return Coreset.empty(metric)
    ids = np.fromiter(points.keys(), dtype=np.int64, count=n)
    vals = list(points.values())
    if metric.is_euclidean:
        locs = np.array([v[0] for v in vals], dtype=float).reshape(n, metric.d)
    else:
        locs = np.array([v[0] for v in vals], dtype=np.int64)
    w = np.array([v[1] for v in vals], dtype=float)
    return Coreset(ids, locs, w, np.full(n, INSERTED, dtype=np.int8), np.full((n, 3), -1, dtype=np.int64))


def size_band(m: int) -> tuple[int, int]:
    """Band ``[n, 2n]`` around a freshly built size m, with m strictly inside when m >= 3."""
    if m <= 0:
        return 0, 0
    lo = max(1, int(math.floor(m / math.sqrt(2))))
    return lo, 2 * lo


class MrTree:
    def __init__(self, params: CostParams, metric: Metric, rng: np.random.Generator | None = None,
                 strict: bool = True):
        self.params = params
        self.metric = metric
        self.rng = rng if rng is not None else np.random.default_rng(params.seed)
        self.strict = strict
        self.k = params.k
        self.root: MrNode | None = None
        self.leaves: list[MrNode] = []
        self.where: dict[int, MrNode] = {}
        self.size = 0
        self.n_lo = 0
        self.n_hi = 0
        self.level_eps = params.epsilon
        self._free: list[int] = []
        self._next_syn = -1
        # statistics
        self.restarts = 0
        self.rebuilds = 0
        self.rebuild_log: list[dict] = []
        self.updates = 0
        self.emitted = defaultdict(int)    # level -> delta ops emitted by nodes at that level
        self.applied = defaultdict(int)    # level -> delta ops applied at that level's input
        self.absorbed = defaultdict(int)   # level -> delta ops subsumed by a restart
        self.level_churn = defaultdict(lambda: [0, 0])
        self.epoch_records: list[tuple] = []

    # -- construction ---------------------------------------------------

    def _new_id(self) -> int:
        i = self._next_syn
        self._next_syn -= 1
        return i

    @classmethod
    def build(cls, P: PointSet, params: CostParams, metric: Metric,
              rng: np.random.Generator | None = None, strict: bool = True) -> "MrTree":
        t = cls(params, metric, rng, strict)
        t._build(P)
        return t

    def _max_height(self) -> int:
        return max(1, int(math.floor(math.log2(max(self.n_hi / self.k, 1.0)))) + 1)

    def _build(self, P: PointSet) -> None:
        m = len(P)
        self.size = m
        self.n_lo, self.n_hi = size_band(m)
        self.where = {}
        self.leaves = []
        self._free = []
        if m == 0:
            self.root = None
            return
        self.level_eps = self.params.epsilon / (2 * self._max_height())
        self.level_params = dataclasses.replace(self.params, epsilon=self.level_eps)
        nleaves = math.ceil(m / self.k)
        h = math.ceil(math.log2(nleaves)) if nleaves > 1 else 0
        self.root = self._make_subtree(h, None)
        for i in range(m):
            leaf = self.leaves[i // self.k]
            pid = int(P.ids[i])
            if pid in self.where:
                raise ValueError(f"duplicate id {pid}")
            leaf.points[pid] = (P.locs[i], float(P.weights[i]))
            self.where[pid] = leaf
        ops.steps += m
        self._free = [l.leaf_index for l in self.leaves if len(l.points) < self.k]
        heapq.heapify(self._free)
        self._init_bottom_up(self.root)

    def _make_subtree(self, h: int, parent) -> MrNode:
        node = MrNode(h, parent)
        if h == 0:
            node.leaf_index = len(self.leaves)
            self.leaves.append(node)
            return node
        node.left = self._make_subtree(h - 1, node)
        node.right = self._make_subtree(h - 1, node)
        return node

    def _init_bottom_up(self, node: MrNode) -> None:
        if node.is_leaf:
            return
        self._init_bottom_up(node.left)
        self._init_bottom_up(node.right)
        self._init_node(node)

    def _init_node(self, node: MrNode) -> None:
        if node.epoch is not None:
            self._record_epoch(node)
        inp = Coreset.concat([node.left.out_coreset(self.metric), node.right.out_coreset(self.metric)],
                             self.metric)
        node.epoch = EpochState(inp.as_pointset(), self.level_params, self.metric, self.rng,
                                new_id=self._new_id, strict=self.strict, allow_empty=True)
        node._reset_counters()

    def _record_epoch(self, node: MrNode) -> None:
        e = node.epoch
        self.epoch_records.append((node.level, node.sub_ins, node.sub_del, node.recv_ins, node.recv_del,
                                   e.churn_ins, e.churn_del, e.n_i, e.n_d))

    # -- updates --------------------------------------------------------

    def insert(self, p) -> None:
        if isinstance(p, WeightedPoint):
            pid, loc, w = p.id, self.metric.as_locations(p.coords)[0], float(p.weight)
        else:
            pid, loc, w = p
        if pid in self.where:
            raise ValueError(f"id {pid} is already present")
        if not w > 0:
            raise ValueError("weight must be positive")
        self.updates += 1
        if self.root is None or self.size + 1 > self.n_hi:
            one = _leaf_coreset({pid: (loc, w)}, self.metric).as_pointset()
            self._rebuild(PointSet.concat([self.live_points(), one], self.metric))
            return
        leaf = self._free_leaf()
        leaf.points[pid] = (loc, w)
        self.where[pid] = leaf
        self.size += 1
        if len(leaf.points) < self.k:
            heapq.heappush(self._free, leaf.leaf_index)
        ops.steps += 1
        self._propagate(leaf, [DeltaOp("+", pid, loc, w, ("inserted",))], inserted=True)

    def delete(self, pid: int) -> None:
        leaf = self.where.get(pid)
        if leaf is None:
            raise KeyError(f"unknown id {pid}")
        self.updates += 1
        del leaf.points[pid]
        del self.where[pid]
        self.size -= 1
        heapq.heappush(self._free, leaf.leaf_index)
        if self.size < self.n_lo:
            self._rebuild(self.live_points())
            return
        ops.steps += 1
        self._propagate(leaf, [DeltaOp("-", pid)], inserted=False)

    def _free_leaf(self) -> MrNode:
        while self._free:
            i = heapq.heappop(self._free)
            if len(self.leaves[i].points) < self.k:
                return self.leaves[i]
        self._graft()
        return self._free_leaf()

    def _graft(self) -> None:
        old = self.root
        root = MrNode(old.level + 1)
        old.parent = root
        root.left = old
        first = len(self.leaves)
        root.right = self._make_subtree(old.level, root)
        for l in self.leaves[first:]:
            heapq.heappush(self._free, l.leaf_index)
        self._init_bottom_up(root.right)
        self.root = root
        self._init_node(root)
        self.restarts += 1

    def _propagate(self, leaf: MrNode, delta: list, inserted: bool) -> None:
        v = leaf.parent
        self.emitted[0] += len(delta)
        while v is not None:
            if inserted:
                v.sub_ins += 1
            else:
                v.sub_del += 1
            v = v.parent
        v = leaf.parent
        while v is not None and delta:
            out: list = []
            for n_done, d in enumerate(delta):
                try:
                    if d.op == "+":
                        out += v.epoch.insert((d.id, d.loc, d.weight))
                        v.recv_ins += 1
                    else:
                        out += v.epoch.delete(d.id)
                        v.recv_del += 1
                except NeedsNewEpoch:
                    self.applied[v.level] += n_done
                    self.absorbed[v.level] += len(delta) - n_done
                    self._restart_from(v)
                    return
            self.applied[v.level] += len(delta)
            self.emitted[v.level] += len(out)
            ins = sum(d.op == "+" for d in out)
            self.level_churn[v.level][0] += ins
            self.level_churn[v.level][1] += len(out) - ins
            delta = out
            v = v.parent

    def _restart_from(self, v: MrNode) -> None:
        while v is not None:
            self._init_node(v)
            v.restarts += 1
            self.restarts += 1
            v = v.parent

    def _rebuild(self, P: PointSet) -> None:
        self.rebuilds += 1
        self.rebuild_log.append({"updates": self.updates, "size": len(P), "band": [self.n_lo, self.n_hi]})
        self._build(P)

    # -- queries --------------------------------------------------------

    @property
    def height(self) -> int:
        return self.root.level if self.root is not None else 0

    def root_coreset(self) -> Coreset:
        if self.root is None:
            return Coreset.empty(self.metric)
        return self.root.out_coreset(self.metric)

    def live_points(self) -> PointSet:
        parts = [_leaf_coreset(l.points, self.metric) for l in self.leaves if l.points]
        return Coreset.concat(parts, self.metric).as_pointset()

    def nodes(self):
        if self.root is None:
            return
        st = [self.root]
        while st:
            v = st.pop()
            yield v
            if not v.is_leaf:
                st.append(v.right)
                st.append(v.left)

    def audit(self) -> list[str]:
        """Invariant violations across every internal node's epoch."""
        bad = []
        for v in self.nodes():
            if v.is_leaf:
                if len(v.points) > self.k:
                    bad.append(f"leaf {v.leaf_index} holds {len(v.points)} > k points")
                continue
            if v.left is None or v.right is None:
                bad.append("internal node without two children")
            if v.epoch is not None:
                bad += [f"level {v.level}: {msg}" for msg in v.epoch.audit()]
        if self.root is not None and self.size and not (self.n_lo <= self.size <= self.n_hi):
            bad.append(f"size {self.size} outside band [{self.n_lo}, {self.n_hi}]")
        return bad

    def stats(self) -> dict:
        levels: dict[int, dict] = {}
        for v in self.nodes():
            s = levels.setdefault(v.level, {"nodes": 0, "coreset_size": 0, "epoch_age": [], "restarts": 0})
            s["nodes"] += 1
            s["restarts"] += v.restarts
            if v.is_leaf:
                s["coreset_size"] += len(v.points)
            elif v.epoch is not None:
                s["coreset_size"] += len(v.epoch.extract())
                s["epoch_age"].append(v.epoch.budget_used)
        for lv, s in levels.items():
            ages = s.pop("epoch_age")
            s["mean_epoch_age"] = float(np.mean(ages)) if ages else 0.0
            s["churn_ins"], s["churn_del"] = self.level_churn[lv] if lv in self.level_churn else (0, 0)
        return {"size": self.size, "height": self.height, "band": [self.n_lo, self.n_hi],
                "level_epsilon": self.level_eps, "restarts": self.restarts, "rebuilds": self.rebuilds,
                "levels": {str(k): levels[k] for k in sorted(levels)}}

    def dump(self) -> str:
        return json.dumps(self.stats())


def build(P: PointSet, params: CostParams, m: Metric, rng=None, **kw) -> MrTree:
    return MrTree.build(P, params, m, rng, **kw)


def mr_insert(t: MrTree, p) -> None:
    t.insert(p)


def mr_delete(t: MrTree, pid: int) -> None:
    t.delete(pid)


def root_coreset(t: MrTree) -> Coreset:
    return t.root_coreset()
