"""Distance-to-illicit walk features for temporal transaction graphs."""

from ._backend import BACKEND
from .features import GwFeatureRow, build_feature_table, fill_unreachable, summarize
from .forest import ForestConfig, ForestModel, fit, predict, predict_proba
from .graph import (
    NodeLabel,
    TemporalSplit,
    TransactionGraph,
    load_graph,
    predecessors,
    temporal_split,
    validate,
)
from .reachability import AllPastLabels, TrainOnlyLabels, compute_reachability, illicit_set
from .walker import SeedWalkStats, WalkConfig, collect_walks, run_all, sample_walk

__version__ = "0.1.0"
