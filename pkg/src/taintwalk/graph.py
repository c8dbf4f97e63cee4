"""Temporal transaction graph: loading, validation, adjacency and splits.

Files follow the public Elliptic layout:

* features: headerless CSV, ``node_id, f1, ..., fF`` with ``f1`` the time step
* classes: CSV with header ``txId,class``; class is ``1``, ``2`` or ``unknown``
* edges: CSV with header ``txId1,txId2``, oriented older -> newer
"""

from __future__ import annotations

import enum
import logging
import os
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)

FEATURES_FILE = "elliptic_txs_features.csv"
CLASSES_FILE = "elliptic_txs_classes.csv"
EDGES_FILE = "elliptic_txs_edgelist.csv"


class GraphFormatError(ValueError):
    """A dataset file is missing or malformed."""


class GraphValidationError(ValueError):
    """The graph violates a structural invariant."""

    def __init__(self, report: ValidationReport):
        self.report = report
        super().__init__("invalid graph: " + "; ".join(report.violations[:5]))


class NodeLabel(enum.IntEnum):
    UNKNOWN = 0
    ILLICIT = 1
    LICIT = 2

    @classmethod
    def parse(cls, token: str) -> NodeLabel:
        try:
            return _LABEL_TOKENS[token.strip()]
        except KeyError:
            raise GraphFormatError(f"invalid class token {token!r}") from None

    @property
    def token(self) -> str:
        return {NodeLabel.ILLICIT: "1", NodeLabel.LICIT: "2"}.get(self, "unknown")


_LABEL_TOKENS = {"1": NodeLabel.ILLICIT, "2": NodeLabel.LICIT, "unknown": NodeLabel.UNKNOWN}


def _csr(rows: np.ndarray, cols: np.ndarray, n: int, col_key: np.ndarray):
    """Compressed adjacency grouped by ``rows``, each group sorted by ``col_key[cols]``."""
    order = np.lexsort((col_key[cols], rows))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return indptr, np.ascontiguousarray(cols[order], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class TransactionGraph:
    """Immutable temporal DAG over dense node indices ``0..n-1``.

    ``ids`` maps dense index -> original id. ``edges`` holds dense
    ``(src, dst)`` pairs. Predecessor lists are sorted by ascending original id.
    """

    ids: np.ndarray
    time_steps: np.ndarray
    labels: np.ndarray
    features: np.ndarray
    edges: np.ndarray
    defaulted_labels: int = 0
    pred_indptr: np.ndarray = field(init=False, repr=False)
    pred_indices: np.ndarray = field(init=False, repr=False)
    succ_indptr: np.ndarray = field(init=False, repr=False)
    succ_indices: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.ids)
        src, dst = self.edges[:, 0], self.edges[:, 1]
        pred = _csr(dst, src, n, self.ids)
        succ = _csr(src, dst, n, self.ids)
        object.__setattr__(self, "pred_indptr", pred[0])
        object.__setattr__(self, "pred_indices", pred[1])
        object.__setattr__(self, "succ_indptr", succ[0])
        object.__setattr__(self, "succ_indices", succ[1])
        for arr in (self.ids, self.time_steps, self.labels, self.features, self.edges,
                    self.pred_indptr, self.pred_indices, self.succ_indptr, self.succ_indices):
            arr.setflags(write=False)

    @classmethod
    def from_arrays(cls, ids, time_steps, labels, features, edges, *, check=True,
                    defaulted_labels=0) -> TransactionGraph:
        """Build a graph from original ids; ``edges`` are pairs of original ids.

        With ``check`` (the default) any invariant violation raises
        :class:`GraphValidationError`.
        """
        ids = np.asarray(ids, dtype=np.int64)
        n = len(ids)
        features = np.ascontiguousarray(np.asarray(features, dtype=np.float64).reshape(n, -1))
        labels = np.asarray([int(NodeLabel(int(v))) for v in labels], dtype=np.int8)
        time_steps = np.asarray(time_steps, dtype=np.int64)
        if len(labels) != n or len(time_steps) != n:
            raise GraphFormatError("ids, time_steps and labels must have equal length")
        index = _index_of(ids)
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        dense = _remap(edges, index)
        graph = cls(ids, time_steps, labels, features, dense, defaulted_labels)
        if check:
            report = validate(graph)
            if not report.ok:
                raise GraphValidationError(report)
        return graph

    @property
    def n_nodes(self) -> int:
        return len(self.ids)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @cached_property
    def index(self) -> dict[int, int]:
        return {int(v): i for i, v in enumerate(self.ids)}

    def idx(self, node_id: int) -> int:
        try:
            return self.index[int(node_id)]
        except KeyError:
            raise KeyError(f"unknown node id {node_id}") from None

    def label_of(self, node_id: int) -> NodeLabel:
        return NodeLabel(int(self.labels[self.idx(node_id)]))

    def pred_idx(self, i: int) -> np.ndarray:
        return self.pred_indices[self.pred_indptr[i]:self.pred_indptr[i + 1]]

    def succ_idx(self, i: int) -> np.ndarray:
        return self.succ_indices[self.succ_indptr[i]:self.succ_indptr[i + 1]]

    def labeled_idx(self) -> np.ndarray:
        return np.flatnonzero(self.labels != NodeLabel.UNKNOWN)


def _index_of(ids: np.ndarray) -> dict[int, int]:
    index = {}
    for i, v in enumerate(ids.tolist()):
        if v in index:
            raise GraphFormatError(f"duplicate node id {v}")
        index[v] = i
    return index


def _remap(edges: np.ndarray, index: dict[int, int]) -> np.ndarray:
    flat = []
    for v in edges.ravel().tolist():
        try:
            flat.append(index[v])
        except KeyError:
            raise GraphFormatError(f"unknown node id {v} in edge list") from None
    return np.asarray(flat, dtype=np.int64).reshape(-1, 2)


def predecessors(graph: TransactionGraph, node_id: int) -> list[int]:
    """Original ids of the incoming neighbours of ``node_id``, ascending."""
    return graph.ids[graph.pred_idx(graph.idx(node_id))].tolist()


def topological_order(graph: TransactionGraph) -> np.ndarray | None:
    """Dense indices in topological order (Kahn), or ``None`` if cyclic."""
    indeg = np.diff(graph.pred_indptr).tolist()
    indptr = graph.succ_indptr.tolist()
    succ = graph.succ_indices.tolist()
    queue = deque(i for i, d in enumerate(indeg) if d == 0)
    order = []
    while queue:
        u = queue.popleft()
        order.append(u)
        for v in succ[indptr[u]:indptr[u + 1]]:
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    if len(order) != graph.n_nodes:
        return None
    return np.asarray(order, dtype=np.int64)


@dataclass
class ValidationReport:
    n_nodes: int
    n_edges: int
    n_illicit: int
    n_licit: int
    n_unknown: int
    min_time_step: int
    max_time_step: int
    is_dag: bool
    temporal_violations: list[tuple[int, int]]
    duplicate_edges: list[tuple[int, int]]
    self_loops: list[int]
    defaulted_labels: int = 0

    @property
    def violations(self) -> list[str]:
        out = []
        if not self.is_dag:
            out.append("graph contains a cycle")
        out += [f"self-loop on {v}" for v in self.self_loops]
        out += [f"duplicate edge {s}->{d}" for s, d in self.duplicate_edges]
        out += [f"edge {s}->{d} points backwards in time" for s, d in self.temporal_violations]
        return out

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(graph: TransactionGraph) -> ValidationReport:
    """Check every structural invariant; violations are reported, never raised."""
    ids, src, dst = graph.ids, graph.edges[:, 0], graph.edges[:, 1]
    loops = src == dst
    back = graph.time_steps[src] > graph.time_steps[dst]
    seen = set()
    dups = []
    for s, d in graph.edges.tolist():
        if (s, d) in seen:
            dups.append((int(ids[s]), int(ids[d])))
        seen.add((s, d))
    counts = np.bincount(graph.labels, minlength=3)
    ts = graph.time_steps
    return ValidationReport(
        n_nodes=graph.n_nodes,
        n_edges=graph.n_edges,
        n_illicit=int(counts[NodeLabel.ILLICIT]),
        n_licit=int(counts[NodeLabel.LICIT]),
        n_unknown=int(counts[NodeLabel.UNKNOWN]),
        min_time_step=int(ts.min()) if len(ts) else 0,
        max_time_step=int(ts.max()) if len(ts) else 0,
        is_dag=topological_order(graph) is not None,
        temporal_violations=[(int(ids[s]), int(ids[d])) for s, d in graph.edges[back].tolist()],
        duplicate_edges=dups,
        self_loops=ids[src[loops]].tolist(),
        defaulted_labels=graph.defaulted_labels,
    )


def _read_csv(path, **kwargs) -> pd.DataFrame:
    if not os.path.isfile(path):
        raise GraphFormatError(f"missing file: {path}")
    try:
        return pd.read_csv(path, **kwargs)
    except (ValueError, pd.errors.ParserError) as exc:
        raise GraphFormatError(f"malformed file {path}: {exc}") from None


def load_graph(features_path, classes_path, edges_path) -> TransactionGraph:
    """Load and validate a graph from the three dataset files."""
    feats = _read_csv(features_path, header=None, dtype=np.float64)
    if feats.shape[1] < 2:
        raise GraphFormatError(f"{features_path}: need an id column and at least one feature")
    values = feats.to_numpy()
    bad = ~np.isfinite(values)
    if bad.any():
        row = int(np.flatnonzero(bad.any(axis=1))[0])
        raise GraphFormatError(f"{features_path}: malformed row {row + 1}")
    ids = values[:, 0]
    if not np.array_equal(ids, np.round(ids)) or np.abs(ids).max(initial=0) >= 2**53:
        raise GraphFormatError(f"{features_path}: node ids must be integers")
    ids = ids.astype(np.int64)
    features = np.ascontiguousarray(values[:, 1:])
    steps = features[:, 0]
    if not np.array_equal(steps, np.round(steps)):
        raise GraphFormatError(f"{features_path}: time step column must be integral")

    index = _index_of(ids)
    classes = _read_csv(classes_path, dtype=str, keep_default_na=False)
    if list(classes.columns) != ["txId", "class"]:
        raise GraphFormatError(f"{classes_path}: expected header txId,class")
    labels = np.zeros(len(ids), dtype=np.int8)
    labelled = np.zeros(len(ids), dtype=bool)
    for tx, cls in zip(classes["txId"].tolist(), classes["class"].tolist()):
        try:
            i = index[int(tx)]
        except ValueError:
            raise GraphFormatError(f"{classes_path}: bad id {tx!r}") from None
        except KeyError:
            raise GraphFormatError(f"{classes_path}: unknown node id {tx}") from None
        if labelled[i]:
            raise GraphFormatError(f"{classes_path}: duplicate class row for {tx}")
        labels[i] = NodeLabel.parse(cls)
        labelled[i] = True
    defaulted = int((~labelled).sum())
    if defaulted:
        log.warning("%d nodes absent from %s default to unknown", defaulted, classes_path)

    edges = _read_csv(edges_path, dtype=np.int64)
    if list(edges.columns) != ["txId1", "txId2"]:
        raise GraphFormatError(f"{edges_path}: expected header txId1,txId2")
    dense = _remap(edges.to_numpy(dtype=np.int64), index)

    graph = TransactionGraph(ids, steps.astype(np.int64), labels, features, dense, defaulted)
    report = validate(graph)
    if not report.ok:
        raise GraphValidationError(report)
    return graph


def load_dataset_dir(path) -> TransactionGraph:
    return load_graph(os.path.join(path, FEATURES_FILE), os.path.join(path, CLASSES_FILE),
                      os.path.join(path, EDGES_FILE))


def write_graph(graph: TransactionGraph, features_path, classes_path, edges_path):
    """Write ``graph`` in the three-file format read by :func:`load_graph`.

    Every node gets a class row, so reloading never defaults a label.
    """
    feats = pd.DataFrame(graph.features)
    feats.insert(0, "id", graph.ids)
    feats.to_csv(features_path, header=False, index=False, float_format="%.17g")
    tokens = {int(v): NodeLabel(int(v)).token for v in NodeLabel}
    pd.DataFrame({"txId": graph.ids, "class": [tokens[v] for v in graph.labels.tolist()]}
                 ).to_csv(classes_path, index=False)
    pd.DataFrame({"txId1": graph.ids[graph.edges[:, 0]], "txId2": graph.ids[graph.edges[:, 1]]}
                 ).to_csv(edges_path, index=False)


def write_dataset_dir(graph: TransactionGraph, path):
    os.makedirs(path, exist_ok=True)
    write_graph(graph, os.path.join(path, FEATURES_FILE), os.path.join(path, CLASSES_FILE),
                os.path.join(path, EDGES_FILE))


@dataclass(frozen=True)
class TemporalSplit:
    """Labelled nodes partitioned by time step; dense indices, ascending."""

    cutoff_step: int
    train: np.ndarray
    test: np.ndarray
    ids: np.ndarray = field(repr=False)

    @property
    def train_ids(self) -> frozenset[int]:
        return frozenset(self.ids[self.train].tolist())

    @property
    def test_ids(self) -> frozenset[int]:
        return frozenset(self.ids[self.test].tolist())


def temporal_split(graph: TransactionGraph, cutoff_step: int) -> TemporalSplit:
    max_step = int(graph.time_steps.max())
    if not 1 <= cutoff_step < max_step:
        raise ValueError(f"cutoff {cutoff_step} outside [1, {max_step - 1}]")
    labelled = graph.labels != NodeLabel.UNKNOWN
    early = graph.time_steps <= cutoff_step
    return TemporalSplit(
        cutoff_step,
        np.flatnonzero(labelled & early),
        np.flatnonzero(labelled & ~early),
        graph.ids,
    )
