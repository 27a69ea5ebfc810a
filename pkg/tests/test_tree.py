import math
from collections import Counter

import numpy as np
import pytest

from dyncoreset.core import CostParams, Metric, PointSet
from dyncoreset.epoch import Coreset, EpochState
from dyncoreset.oracle import distortion
from dyncoreset.tree import MrTree, build, mr_delete, mr_insert, root_coreset, size_band

from conftest import blobs


def make(n, k=3, seed=0, **kw):
    m = Metric.euclidean(2)
    P = PointSet.from_array(blobs(n, 2, [(0, 0), (7, 7), (0, 7)], seed=seed), m)
    return build(P, CostParams(k=k, seed=seed, **kw), m, np.random.default_rng(seed)), P, m


def entry_set(C: Coreset):
    return Counter(zip(C.ids.tolist(), np.round(C.weights, 9).tolist()))


def test_small_input_is_single_leaf():
    t, P, m = make(3, k=3)
    assert t.height == 0 and len(t.leaves) == 1
    assert entry_set(root_coreset(t)) == entry_set(Coreset.from_pointset(P))


def test_four_k_points():
    k = 3
    t, P, m = make(4 * k, k=k)
    assert len(t.leaves) == 4 and t.height == 2
    internal = [v for v in t.nodes() if not v.is_leaf]
    assert len(internal) == 3
    assert all(v.left is not None and v.right is not None for v in internal)


def test_height_matches_leaf_count():
    t, _, _ = make(100, k=3)
    assert t.height == math.ceil(math.log2(len(t.leaves)))


def test_root_equals_offline_composition():
    t, P, m = make(60, k=3, seed=2)
    rng = np.random.default_rng(2)
    counter = [-1]

    def new_id():
        counter[0] -= 1
        return counter[0] + 1

    def compose(v):
        if v.is_leaf:
            pts = v.points
            return Coreset.from_pointset(PointSet(np.array(list(pts)), np.array([p[0] for p in pts.values()]),
                                                  np.array([p[1] for p in pts.values()])))
        inp = Coreset.concat([compose(v.left), compose(v.right)], m)
        return EpochState(inp.as_pointset(), t.level_params, m, rng, new_id=new_id, allow_empty=True).extract()

    assert entry_set(compose(t.root)) == entry_set(root_coreset(t))


def test_root_distortion_after_build():
    t, P, m = make(4000, k=3, seed=1)
    rep = distortion(P, root_coreset(t), m, 3, 2, 200, np.random.default_rng(0))
    assert rep.max_rel_err <= 0.2


def test_empty_tree():
    m = Metric.euclidean(2)
    t = MrTree(CostParams(k=2), m)
    assert len(root_coreset(t)) == 0
    mr_insert(t, (0, np.array([1.0, 1.0]), 1.0))
    assert root_coreset(t).entries() == {0: (1.0, ("inserted",))}
    mr_delete(t, 0)
    assert t.root is None and len(root_coreset(t)) == 0


def test_insert_with_spare_capacity_adds_one_entry_per_level():
    t, P, m = make(40, k=4, seed=3)
    leaf = next(l for l in t.leaves if len(l.points) < 4)
    assert all(v.epoch.budget_used == 0 for v in t.nodes() if not v.is_leaf)
    applied = dict(t.applied)
    mr_insert(t, (10 ** 6, np.array([0.1, 0.2]), 1.0))
    assert t.where[10 ** 6] is leaf
    assert t.restarts == 0
    for lvl in range(1, t.height + 1):
        assert t.applied[lvl] - applied.get(lvl, 0) == 1
    assert 10 ** 6 in root_coreset(t).entries()


def test_k_plus_one_updates_reinit_once():
    k = 4
    t, P, m = make(64, k=k, seed=4)
    leaf = t.leaves[0]
    node = leaf.parent
    ids = list(leaf.points)[:k]
    before = node.restarts
    for i, pid in enumerate(ids):
        mr_delete(t, pid)
        mr_insert(t, (10 ** 6 + i, np.array([0.0, 0.0]), 1.0))
        if i == 1:
            assert node.restarts == before
    # 2k updates passed through the node: it re-initialized once per k + 1 of them
    assert node.restarts - before == 1


def test_rebuild_when_size_leaves_band():
    t, P, m = make(40, k=3, seed=5)
    lo, hi = t.n_lo, t.n_hi
    assert lo <= 40 <= hi
    nxt = 10 ** 6
    while t.rebuilds == 0:
        mr_insert(t, (nxt, np.array([1.0, 2.0]), 1.0))
        nxt += 1
    assert t.size == hi + 1
    assert t.rebuild_log[0]["size"] == hi + 1
    assert t.n_lo <= t.size <= t.n_hi
    assert root_coreset(t).total_weight == pytest.approx(t.size)


def test_rebuild_preserves_dataset():
    t, P, m = make(50, k=3, seed=6)
    before = Counter(zip(t.live_points().ids.tolist(), t.live_points().weights.tolist()))
    t._rebuild(t.live_points())
    after = Counter(zip(t.live_points().ids.tolist(), t.live_points().weights.tolist()))
    assert before == after


def test_size_band_contains_build_size():
    for m_ in range(1, 500):
        lo, hi = size_band(m_)
        assert lo <= m_ <= hi and hi == 2 * lo


def test_random_deletions_keep_distortion():
    t, P, m = make(4000, k=3, seed=7)
    rng = np.random.default_rng(7)
    for pid in rng.choice(4000, size=2000, replace=False).tolist():
        mr_delete(t, pid)
    live = t.live_points()
    assert len(live) == 2000
    assert t.audit() == []
    rep = distortion(live, root_coreset(t), m, 3, 2, 200, np.random.default_rng(1))
    assert rep.max_rel_err <= 0.2


def test_delta_conservation_and_level_churn():
    t, P, m = make(600, k=3, seed=8)
    rng = np.random.default_rng(8)
    live = list(P.ids.tolist())
    nxt = 10 ** 6
    for _ in range(400):
        if rng.random() < 0.5:
            mr_delete(t, live.pop(int(rng.integers(len(live)))))
        else:
            mr_insert(t, (nxt, rng.normal(size=2) * 3, 1.0))
            live.append(nxt)
            nxt += 1
    assert sorted(t.live_points().ids.tolist()) == sorted(live)
    for lvl in range(0, t.height):
        assert t.emitted[lvl] == t.applied[lvl + 1] + t.absorbed[lvl + 1]
    recs = t.epoch_records
    assert recs
    ok = sum(ri <= si + lvl * sd and rd <= sd for lvl, si, sd, ri, rd, *_ in recs)
    assert ok >= 0.95 * len(recs)


def test_duplicate_and_unknown_ids():
    t, P, m = make(20, k=3)
    with pytest.raises(ValueError):
        mr_insert(t, (0, np.array([0.0, 0.0]), 1.0))
    with pytest.raises(KeyError):
        mr_delete(t, 10 ** 9)


def test_stats_dump():
    import json
    t, P, m = make(200, k=3)
    d = json.loads(t.dump())
    assert d["size"] == 200
    assert d["levels"]["0"]["nodes"] == len(t.leaves)
    assert d["levels"]["0"]["coreset_size"] == 200
