"""Desk-scale synthetic datasets in the Elliptic file layout.

Nodes are spread over time steps in order; each node draws 0-3 predecessors
among earlier nodes of its own or the previous step. For an illicit node,
each predecessor comes from the earlier illicit nodes of that window with
probability ``cluster_bias``, otherwise from the whole window. Anonymous
features are unit Gaussians shifted by ``feature_signal`` for illicit nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as rng_streams
from .graph import NodeLabel, TransactionGraph

IN_DEGREE_P = (0.15, 0.35, 0.30, 0.20)


@dataclass(frozen=True)
class SynthConfig:
    n_nodes: int = 5000
    n_timesteps: int = 49
    illicit_fraction: float = 0.1
    cluster_bias: float = 0.5
    feature_dim: int = 16
    feature_signal: float = 0.5
    unknown_fraction: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if not 0 < self.illicit_fraction < 1:
            raise ValueError("illicit_fraction must lie in (0, 1)")
        if self.n_timesteps < 1:
            raise ValueError("n_timesteps must be >= 1")
        if self.feature_dim < 1:
            raise ValueError("feature_dim must be >= 1")
        if not 0 <= self.cluster_bias <= 1:
            raise ValueError("cluster_bias must lie in [0, 1]")
        if not 0 <= self.unknown_fraction < 1:
            raise ValueError("unknown_fraction must lie in [0, 1)")
        n_ill = round(self.illicit_fraction * self.n_nodes)
        if n_ill < 1 or n_ill >= self.n_nodes:
            raise ValueError("infeasible config: need at least one illicit and one licit node")


def generate(config: SynthConfig) -> TransactionGraph:
    rng = rng_streams.generator(config.rng_seed, rng_streams.SYNTH)
    n = config.n_nodes
    steps = np.sort(rng.integers(1, config.n_timesteps + 1, n))
    illicit = np.zeros(n, dtype=bool)
    illicit[rng.choice(n, round(config.illicit_fraction * n), replace=False)] = True
    illicit_idx = np.flatnonzero(illicit)
    window_lo = np.searchsorted(steps, steps - 1, side="left")
    degrees = rng.choice(len(IN_DEGREE_P), size=n, p=IN_DEGREE_P)

    edges = []
    for i in range(n):
        lo = int(window_lo[i])
        d = min(int(degrees[i]), i - lo)
        if d == 0:
            continue
        pool = None
        if illicit[i]:
            a, b = np.searchsorted(illicit_idx, [lo, i])
            pool = illicit_idx[a:b]
        chosen = []
        for _ in range(d):
            for _attempt in range(8):
                if pool is not None and len(pool) and rng.random() < config.cluster_bias:
                    c = int(pool[rng.integers(len(pool))])
                else:
                    c = int(rng.integers(lo, i))
                if c not in chosen:
                    chosen.append(c)
                    break
        edges.extend((c, i) for c in chosen)

    labels = np.where(illicit, NodeLabel.ILLICIT, NodeLabel.LICIT).astype(np.int8)
    labels[rng.random(n) < config.unknown_fraction] = NodeLabel.UNKNOWN
    anon = rng.normal(size=(n, config.feature_dim)) + config.feature_signal * illicit[:, None]
    features = np.column_stack([steps.astype(np.float64), anon])
    ids = np.sort(rng.choice(10 * n, n, replace=False)).astype(np.int64)
    ids = rng.permutation(ids)
    edge_ids = ids[np.asarray(edges, dtype=np.int64).reshape(-1, 2)]
    return TransactionGraph.from_arrays(ids, steps, labels, features, edge_ids)
