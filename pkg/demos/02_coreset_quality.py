"""How well the maintained coreset tracks the cost of arbitrary solutions."""
import numpy as np

from dyncoreset import Clusterer, Metric
from dyncoreset.oracle import distortion

rng = np.random.default_rng(3)
m = Metric.euclidean(2)
C = rng.uniform(-10, 10, size=(5, 2))
X = C[rng.integers(5, size=6000)] + rng.normal(size=(6000, 2))

# the default constants are the conservative ones: at this size the coreset
# hardly compresses.  smaller sampling constants trade accuracy for size;
# the per-level accuracy is eps / (2 * height), so they must be quite small.
for knobs in ({}, {"coreset_scale": 1e-6, "large_group_scale": 0.02},
              {"coreset_scale": 1e-7, "large_group_scale": 0.02}):
    c = Clusterer(m, k=5, seed=0, strict=False, **knobs)
    live = c.insert_many(X[:5000])
    for x in X[5000:]:
        live.append(c.insert(x))
    for pid in rng.choice(live, size=1000, replace=False):
        c.delete(int(pid))
    rep = distortion(c.points(), c.coreset(), m, 5, 2, 100, np.random.default_rng(1))
    print(knobs or "defaults")
    print("  live %d  coreset %d  max rel err %.4f  mean %.4f"
          % (len(c), len(c.coreset()), rep.max_rel_err, rep.mean_rel_err))
    print("  worst family:", max(rep.family_max, key=rep.family_max.get))
