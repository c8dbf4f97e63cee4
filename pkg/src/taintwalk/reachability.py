"""Which nodes have an illicit strict ancestor.

Walks can only succeed from such nodes, so they are the only valid seeds.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .graph import NodeLabel, TransactionGraph


@dataclass(frozen=True)
class AllPastLabels:
    """Every illicit label is visible to the walker."""

    def mask(self, graph: TransactionGraph) -> np.ndarray:
        return graph.labels == NodeLabel.ILLICIT


@dataclass(frozen=True)
class TrainOnlyLabels:
    """Only illicit labels at or before ``cutoff_step`` are visible."""

    cutoff_step: int

    def mask(self, graph: TransactionGraph) -> np.ndarray:
        return (graph.labels == NodeLabel.ILLICIT) & (graph.time_steps <= self.cutoff_step)


LabelPolicy = AllPastLabels | TrainOnlyLabels


def illicit_mask(graph: TransactionGraph, policy: LabelPolicy) -> np.ndarray:
    """Boolean array over dense indices: node counts as illicit under ``policy``."""
    return np.ascontiguousarray(policy.mask(graph))


def illicit_set(graph: TransactionGraph, policy: LabelPolicy) -> set[int]:
    return set(graph.ids[illicit_mask(graph, policy)].tolist())


@dataclass(frozen=True)
class ReachabilityMap:
    can_reach: np.ndarray
    ids: np.ndarray

    @property
    def count(self) -> int:
        return int(self.can_reach.sum())

    def __getitem__(self, node_id: int) -> bool:
        return bool(self.can_reach[np.flatnonzero(self.ids == node_id)[0]])

    def reachable_ids(self) -> set[int]:
        return set(self.ids[self.can_reach].tolist())


def compute_reachability(graph: TransactionGraph, policy: LabelPolicy) -> ReachabilityMap:
    """One forward traversal from every illicit node along the original edges.

    Sources are not marked themselves: an illicit node is reachable only via
    another illicit ancestor.
    """
    sources = np.flatnonzero(illicit_mask(graph, policy))
    reached = np.zeros(graph.n_nodes, dtype=bool)
    expanded = np.zeros(graph.n_nodes, dtype=bool)
    indptr = graph.succ_indptr.tolist()
    succ = graph.succ_indices.tolist()
    queue = deque(sources.tolist())
    while queue:
        u = queue.popleft()
        if expanded[u]:
            continue
        expanded[u] = True
        for v in succ[indptr[u]:indptr[u + 1]]:
            if not reached[v]:
                reached[v] = True
                queue.append(v)
    reached.setflags(write=False)
    return ReachabilityMap(reached, graph.ids)
