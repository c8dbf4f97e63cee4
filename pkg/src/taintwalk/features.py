"""Nine distance-to-illicit features per node, summarised from walk statistics.

Lengths are in edges traversed. Nodes that cannot reach an illicit node get
the fill row: -1 everywhere except ``hit``, which is 0.
"""

from __future__ import annotations

import csv
from dataclasses import astuple, dataclass

import numpy as np

from .walker import SeedWalkStats

FEATURE_NAMES = ("min", "max", "mean", "std", "median", "q25", "q75", "hit", "illicit")
HEADER = ("txId", *FEATURE_NAMES, "reachable")
GWF_STAR = ("hit", "std", "illicit", "max", "mean")


@dataclass(frozen=True)
class GwFeatureRow:
    node_id: int
    min: float
    max: float
    mean: float
    std: float
    median: float
    q25: float
    q75: float
    hit: float
    illicit: int
    reachable: bool

    def values(self) -> tuple:
        return astuple(self)[1:10]


def summarize(stats: SeedWalkStats, k: int | None = None) -> GwFeatureRow:
    """Order statistics of the successful walk lengths.

    ``std`` uses the population denominator; quartiles interpolate linearly
    between closest ranks. ``hit`` is successes over all attempts.
    """
    lengths = np.sort(np.asarray(stats.successful_lengths, dtype=np.float64))
    n = len(lengths)
    if n == 0:
        raise ValueError(f"seed {stats.seed_id} has no successful walks; emit a fill row")
    if k is not None and n != k and not stats.truncated:
        raise ValueError(f"seed {stats.seed_id}: {n} successful walks, expected {k}")
    q25, median, q75 = np.quantile(lengths, [0.25, 0.5, 0.75])
    return GwFeatureRow(
        node_id=stats.seed_id,
        min=float(lengths.min()),
        max=float(lengths.max()),
        mean=float(lengths.mean()),
        std=float(lengths.std()),
        median=float(median),
        q25=float(q25),
        q75=float(q75),
        hit=n / stats.total_attempts,
        illicit=len(stats.distinct_terminals),
        reachable=True,
    )


def fill_unreachable(node_id: int) -> GwFeatureRow:
    return GwFeatureRow(node_id, -1.0, -1.0, -1.0, -1.0, -1.0, -1.0, -1.0, 0.0, -1, False)


def build_feature_table(stats_map: dict[int, SeedWalkStats], all_seed_ids,
                        k: int) -> list[GwFeatureRow]:
    """One row per seed in ascending id order; seeds without walks are filled."""
    seeds = sorted(set(int(s) for s in all_seed_ids))
    extra = set(stats_map) - set(seeds)
    if extra:
        raise ValueError(f"walk statistics for {len(extra)} ids outside the seed list")
    rows = []
    for s in seeds:
        st = stats_map.get(s)
        if st is None or not st.successful_lengths:
            rows.append(fill_unreachable(s))
        else:
            rows.append(summarize(st, k))
    return rows


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % v


def write_feature_table(rows, path):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(HEADER)
        for r in rows:
            out.writerow([_fmt(v) for v in astuple(r)])


def read_feature_table(path) -> list[GwFeatureRow]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != HEADER:
            raise ValueError(f"{path}: expected header {','.join(HEADER)}")
        for rec in reader:
            if len(rec) != len(HEADER):
                raise ValueError(f"{path}: malformed row {rec!r}")
            vals = [float(v) for v in rec[1:8]]
            rows.append(GwFeatureRow(int(rec[0]), *vals, float(rec[8]), int(rec[9]),
                                     rec[10] == "1"))
    return rows


def feature_matrix(rows) -> tuple[np.ndarray, np.ndarray]:
    """``(ids, values)`` with ``values`` shaped ``(len(rows), 9)``."""
    ids = np.asarray([r.node_id for r in rows], dtype=np.int64)
    values = np.asarray([r.values() for r in rows], dtype=np.float64).reshape(len(rows), 9)
    return ids, values
