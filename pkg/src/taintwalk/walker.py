"""Backward-in-time random walks that stop at the first illicit node."""

from __future__ import annotations

import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng as rng_streams
from ._backend import kernels as default_kernels
from .graph import TransactionGraph
from .reachability import AllPastLabels, LabelPolicy, ReachabilityMap, illicit_mask


@dataclass(frozen=True)
class WalkConfig:
    k_successful: int = 100
    rng_seed: int = 0
    max_attempts_per_seed: int | None = None
    policy: LabelPolicy = field(default_factory=AllPastLabels)

    def __post_init__(self):
        if self.k_successful < 1:
            raise ValueError("k_successful must be >= 1")
        cap = self.max_attempts_per_seed
        if cap is not None and cap < self.k_successful:
            raise ValueError("max_attempts_per_seed must be >= k_successful")


@dataclass(frozen=True)
class Success:
    length: int
    terminal_id: int
    path: tuple[int, ...]


@dataclass(frozen=True)
class DeadEnd:
    length: int
    path: tuple[int, ...]


WalkOutcome = Success | DeadEnd


@dataclass(frozen=True)
class SeedWalkStats:
    seed_id: int
    successful_lengths: tuple[int, ...]
    distinct_terminals: frozenset[int]
    total_attempts: int
    truncated: bool = False


def sample_walk(graph: TransactionGraph, seed_id: int, illicit: np.ndarray,
                rng: np.random.Generator) -> WalkOutcome:
    """One walk from ``seed_id`` to a uniformly drawn predecessor at each step.

    The seed's own label never stops the walk. A uniform is drawn only when
    there is more than one predecessor, matching the batched kernel, so
    repeated calls on one generator reproduce :func:`collect_walks` exactly.
    """
    cur = graph.idx(seed_id)
    path = [cur]
    while True:
        preds = graph.pred_idx(cur)
        deg = len(preds)
        if deg == 0:
            return DeadEnd(len(path) - 1, tuple(graph.ids[path].tolist()))
        j = 0 if deg == 1 else min(int(rng.random() * deg), deg - 1)
        cur = int(preds[j])
        path.append(cur)
        if illicit[cur]:
            ids = tuple(graph.ids[path].tolist())
            return Success(len(path) - 1, ids[-1], ids)


def has_illicit_ancestor(graph: TransactionGraph, i: int, illicit: np.ndarray) -> bool:
    seen = {i}
    queue = deque([i])
    while queue:
        for u in graph.pred_idx(queue.popleft()).tolist():
            if illicit[u]:
                return True
            if u not in seen:
                seen.add(u)
                queue.append(u)
    return False


def collect_walks(graph: TransactionGraph, seed_id: int, config: WalkConfig,
                  illicit: np.ndarray | None = None, reachable: bool | None = None,
                  kernels=None) -> SeedWalkStats:
    """Repeat walks from ``seed_id`` until ``k_successful`` of them succeed.

    Dead ends count towards ``total_attempts`` only. Raises ``ValueError``
    when the seed cannot reach an illicit node and attempts are unbounded.
    """
    kernels = kernels or default_kernels
    if illicit is None:
        illicit = illicit_mask(graph, config.policy)
    i = graph.idx(seed_id)
    cap = config.max_attempts_per_seed
    if cap is None:
        if reachable is None:
            reachable = has_illicit_ancestor(graph, i, illicit)
        if not reachable:
            raise ValueError(f"seed {seed_id} cannot reach an illicit node; "
                             "walks would not terminate")
    bitgen = rng_streams.bit_generator(config.rng_seed, rng_streams.WALKER, seed_id)
    lengths, terminals, attempts, truncated = kernels.collect_walks(
        graph.pred_indptr, graph.pred_indices, illicit.view(np.uint8), i,
        config.k_successful, -1 if cap is None else cap, bitgen)
    return SeedWalkStats(
        seed_id=int(seed_id),
        successful_lengths=tuple(lengths.tolist()),
        distinct_terminals=frozenset(graph.ids[np.unique(terminals)].tolist()),
        total_attempts=int(attempts),
        truncated=bool(truncated),
    )


def run_all(graph: TransactionGraph, seeds, config: WalkConfig, reach: ReachabilityMap,
            workers: int | None = 1, kernels=None) -> dict[int, SeedWalkStats]:
    """Walk statistics for every reachable seed, keyed by ascending seed id.

    Each seed draws from its own stream, so the result does not depend on
    ``workers`` (``None`` means one per CPU).
    """
    illicit = illicit_mask(graph, config.policy)
    idx = [graph.idx(s) for s in seeds]
    chosen = sorted({int(graph.ids[i]) for i in idx if reach.can_reach[i]})
    if not chosen:
        return {}

    def work(batch):
        return [collect_walks(graph, s, config, illicit, True, kernels) for s in batch]

    workers = workers or os.cpu_count() or 1
    if workers == 1:
        results = work(chosen)
    else:
        n_batches = min(len(chosen), workers * 8)
        batches = [chosen[b::n_batches] for b in range(n_batches)]
        with ThreadPoolExecutor(workers) as pool:
            results = [st for part in pool.map(work, batches) for st in part]
    return {st.seed_id: st for st in sorted(results, key=lambda st: st.seed_id)}
