"""Fully dynamic (k, z)-clustering on top of a maintained coreset."""
from .core import CostParams, Metric, PointSet, WeightedPoint, ops, point_cost, set_cost
from .static import Solution, bicriteria_init, d2_seeding, local_search, lloyd, query_solve
from .epoch import (Coreset, DeltaOp, EpochState, InvariantError, NeedsNewEpoch, check_property,
                    coreset_size, epoch_delete, epoch_insert, extract_coreset, init_epoch)
from .tree import MrTree
from .clusterer import Clusterer, QueryResult
from .oracle import brute_opt, churn_audit, distortion

__all__ = [
    "CostParams", "Metric", "PointSet", "WeightedPoint", "ops", "point_cost", "set_cost",
    "Solution", "bicriteria_init", "d2_seeding", "local_search", "lloyd", "query_solve",
    "Coreset", "DeltaOp", "EpochState", "InvariantError", "NeedsNewEpoch", "check_property",
    "coreset_size", "epoch_delete", "epoch_insert", "extract_coreset", "init_epoch",
    "MrTree", "Clusterer", "QueryResult", "brute_opt", "churn_audit", "distortion",
]
__version__ = "0.1.0"
