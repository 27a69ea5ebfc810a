"""Insert points, query centers, delete a whole cluster, query again."""
import numpy as np

from dyncoreset import Clusterer, Metric

rng = np.random.default_rng(0)

# three well separated blobs in the plane
centers = np.array([[0.0, 0.0], [8.0, 0.0], [4.0, 7.0]])
labels = rng.integers(3, size=3000)
X = centers[labels] + rng.normal(scale=0.7, size=(3000, 2))

# the clusterer hands out an integer id for every inserted point
c = Clusterer(Metric.euclidean(2), k=3, seed=1)
ids = [c.insert(x) for x in X]
print("live points:", len(c), " coreset size:", len(c.coreset()))

res = c.query(exact=True)
print("centers:\n", np.round(res.centers, 2))
print("cost on coreset %.1f, cost on data %.1f" % (res.coreset_cost, res.true_cost))

# delete every point of the first blob
for pid, lab in zip(ids, labels):
    if lab == 0:
        c.delete(pid)
print("after deleting blob 0:", len(c), "points left")

# two clusters remain, so asking for k = 2 is enough
res = c.query(k=2, exact=True)
print("centers:\n", np.round(res.centers, 2))
print("cost on data %.1f" % res.true_cost)

# counters kept by the engine
s = c.stats()
print({key: s[key] for key in ("updates", "epoch_restarts", "rebuilds", "height", "coreset_size")})
