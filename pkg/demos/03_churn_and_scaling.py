"""Coreset churn inside one epoch, and primitive operations per update."""
import numpy as np

from dyncoreset import Clusterer, CostParams, EpochState, Metric, PointSet, ops
from dyncoreset.oracle import churn_audit

m = Metric.euclidean(2)
rng = np.random.default_rng(5)

# one epoch: k updates against a fixed starting set
C = rng.uniform(-10, 10, size=(6, 2))
X = C[rng.integers(6, size=10_000)] + rng.normal(size=(10_000, 2))
st = EpochState(PointSet.from_array(X, m), CostParams(k=50, coreset_scale=3e-4, large_group_scale=0.02), m, rng)
print("large groups:", len(st.large_groups()), " coreset size:", len(st.extract()))
for pid in rng.choice(10_000, size=30, replace=False):
    st.delete(int(pid))
for j in range(20):
    st.insert((10_000 + j, rng.uniform(-10, 10, size=2), 1.0))
print("inserts %d deletes %d -> coreset insertions %d deletions %d, bound holds: %s"
      % (st.n_i, st.n_d, st.churn_ins, st.churn_del, churn_audit(st)))

# operations per insert as the data grows
for n in (1000, 2000, 4000):
    Y = C[rng.integers(6, size=n)] + rng.normal(size=(n, 2))
    c = Clusterer(m, k=10, seed=0, strict=False, coreset_scale=6e-7, large_group_scale=5e-4)
    ops.reset()
    for y in Y:
        c.insert(y)
    print("n=%5d  ops per insert %8.0f  height %d" % (n, ops.total / n, c.tree.height))
