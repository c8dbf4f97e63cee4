"""End-to-end steps shared by the CLI and the experiment scripts."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from . import evaluation, features, forest
from .graph import NodeLabel, TransactionGraph, temporal_split
from .reachability import AllPastLabels, TrainOnlyLabels, compute_reachability
from .walker import WalkConfig, run_all

log = logging.getLogger(__name__)

FEATURE_SETS = ("af", "gwf", "af+gwf", "af+gwf*", "custom")


@dataclass
class ExtractSummary:
    n_seeds: int
    n_reachable: int
    mean_attempts: float
    n_truncated: int
    seconds: float


def make_policy(name: str, cutoff: int):
    if name == "all-past":
        return AllPastLabels()
    if name == "train-only":
        return TrainOnlyLabels(cutoff)
    raise ValueError(f"unknown label policy {name!r}")


def extract(graph: TransactionGraph, config: WalkConfig, workers: int | None = 1,
            seeds=None) -> tuple[list[features.GwFeatureRow], ExtractSummary]:
    """Walk features for ``seeds`` (default: every labelled node)."""
    start = time.perf_counter()
    if seeds is None:
        seeds = graph.ids[graph.labeled_idx()].tolist()
    reach = compute_reachability(graph, config.policy)
    stats = run_all(graph, seeds, config, reach, workers=workers)
    rows = features.build_feature_table(stats, seeds, config.k_successful)
    attempts = [st.total_attempts for st in stats.values()]
    summary = ExtractSummary(
        n_seeds=len(rows),
        n_reachable=len(stats),
        mean_attempts=float(np.mean(attempts)) if attempts else 0.0,
        n_truncated=sum(st.truncated for st in stats.values()),
        seconds=time.perf_counter() - start,
    )
    return rows, summary


def af_names(graph: TransactionGraph) -> list[str]:
    return [f"f{j + 1}" for j in range(graph.n_features)]


def resolve_columns(feature_set: str, graph: TransactionGraph, custom=None) -> list[str]:
    af = af_names(graph)
    if feature_set == "af":
        return af
    if feature_set == "gwf":
        return list(features.FEATURE_NAMES)
    if feature_set == "af+gwf":
        return af + list(features.FEATURE_NAMES)
    if feature_set == "af+gwf*":
        return af + list(features.GWF_STAR)
    if feature_set == "custom":
        cols = list(custom or [])
        if not cols:
            raise ValueError("custom feature set needs at least one column")
        known = set(af) | set(features.FEATURE_NAMES)
        missing = [c for c in cols if c not in known]
        if missing:
            raise ValueError(f"unknown columns: {', '.join(missing)}")
        return cols
    raise ValueError(f"unknown feature set {feature_set!r}")


def needs_gwf(columns) -> bool:
    return any(c in features.FEATURE_NAMES for c in columns)


class FeatureTable:
    """Column lookup over the anonymous features plus optional walk features."""

    def __init__(self, graph: TransactionGraph, gwf_rows=None):
        self.graph = graph
        self._cols = {name: graph.features[:, j] for j, name in enumerate(af_names(graph))}
        if gwf_rows is not None:
            ids, values = features.feature_matrix(gwf_rows)
            pos = np.full(graph.n_nodes, -1, dtype=np.int64)
            for r, node_id in enumerate(ids.tolist()):
                pos[graph.idx(node_id)] = r
            self._gwf_pos = pos
            for j, name in enumerate(features.FEATURE_NAMES):
                self._cols[name] = values[:, j]
        else:
            self._gwf_pos = None

    def matrix(self, idx: np.ndarray, columns) -> np.ndarray:
        out = np.empty((len(idx), len(columns)), dtype=np.float64)
        for j, name in enumerate(columns):
            if name in features.FEATURE_NAMES:
                if self._gwf_pos is None:
                    raise ValueError(f"column {name!r} needs a walk-feature file")
                rows = self._gwf_pos[idx]
                if (rows < 0).any():
                    raise ValueError(f"walk-feature file lacks {(rows < 0).sum()} "
                                     "evaluated nodes")
                out[:, j] = self._cols[name][rows]
            else:
                out[:, j] = self._cols[name][idx]
        return out


@dataclass
class TrainEvalResult:
    report: evaluation.EvaluationReport
    model: forest.ForestModel
    columns: list[str]
    X_test: np.ndarray
    y_test: np.ndarray
    test_idx: np.ndarray
    scores: np.ndarray


def train_eval(graph: TransactionGraph, columns, gwf_rows=None, cutoff: int = 34,
               forest_config: forest.ForestConfig | None = None, threshold: float = 0.5,
               workers: int | None = 1) -> TrainEvalResult:
    split = temporal_split(graph, cutoff)
    if len(split.test) == 0:
        raise ValueError(f"no labelled nodes after time step {cutoff}")
    table = FeatureTable(graph, gwf_rows)
    y = (graph.labels == NodeLabel.ILLICIT).astype(np.int64)
    X_train = table.matrix(split.train, columns)
    X_test = table.matrix(split.test, columns)
    model = forest.fit(X_train, y[split.train], forest_config, workers=workers)
    scores = forest.predict_proba(model, X_test)
    report = evaluation.evaluate(y[split.test], scores, graph.time_steps[split.test], threshold)
    return TrainEvalResult(report, model, list(columns), X_test, y[split.test], split.test,
                           scores)
