"""Random forest of CART trees (Gini, bootstrap, random feature subsets per split)."""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import rng as rng_streams
from ._backend import kernels as default_kernels

FORMAT_VERSION = 1


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 50
    max_split_features: int = 50
    min_samples_split: int = 2
    max_depth: int | None = None
    bootstrap: bool = True
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.max_split_features < 1:
            raise ValueError("max_split_features must be >= 1")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat binary tree; ``left[i] == -1`` marks a leaf. Rows with
    ``x[feature] <= threshold`` go left. ``value`` is the positive fraction."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.value)

    def used_features(self) -> set[int]:
        return set(self.feature[self.left >= 0].tolist())


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: list[Tree]
    feature_count: int
    config: ForestConfig
    class_prior: float


def _as_matrix(X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be two-dimensional")
    return X


def _grow_tree(X, Xt, y, tree_index, cfg, kernels) -> Tree:
    n, n_feat = X.shape
    rng = rng_streams.generator(cfg.rng_seed, rng_streams.FOREST, tree_index)
    if cfg.bootstrap:
        weights = np.bincount(rng.integers(0, n, n), minlength=n).astype(np.int64)
    else:
        weights = np.ones(n, dtype=np.int64)
    positive = weights * y
    m = min(cfg.max_split_features, n_feat)

    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        for lst, v in ((feature, -1), (threshold, 0.0), (left, -1), (right, -1), (value, 0.0)):
            lst.append(v)
        return len(value) - 1

    stack = [(new_node(), np.flatnonzero(weights).astype(np.int64), 0)]
    while stack:
        node, samples, depth = stack.pop()
        w_tot = int(weights[samples].sum())
        p_tot = int(positive[samples].sum())
        value[node] = p_tot / w_tot
        if (p_tot == 0 or p_tot == w_tot or w_tot < cfg.min_samples_split
                or (cfg.max_depth is not None and depth >= cfg.max_depth)):
            continue
        order = rng.permutation(n_feat).astype(np.int64)
        f, thr, _ = kernels.best_split(Xt, y, weights, samples, order, m)
        if f < 0:
            continue
        go_left = X[samples, f] <= thr
        lo, hi = new_node(), new_node()
        feature[node], threshold[node], left[node], right[node] = f, thr, lo, hi
        stack.append((hi, samples[~go_left], depth + 1))
        stack.append((lo, samples[go_left], depth + 1))

    return Tree(np.asarray(feature, dtype=np.int64), np.asarray(threshold, dtype=np.float64),
                np.asarray(left, dtype=np.int64), np.asarray(right, dtype=np.int64),
                np.asarray(value, dtype=np.float64))


def fit(X, y, config: ForestConfig | None = None, workers: int | None = 1,
        kernels=None) -> ForestModel:
    """Train a forest; trees use independent streams so ``workers`` does not
    change the model."""
    config = config or ForestConfig()
    kernels = kernels or default_kernels
    X = _as_matrix(X)
    y = np.asarray(y)
    if len(y) != X.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {len(y)} labels")
    if X.shape[0] < 2:
        raise ValueError("need at least two training rows")
    if not np.isfinite(X).all():
        raise ValueError("X contains NaN or infinite values")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    y = np.ascontiguousarray(y, dtype=np.uint8)
    if y.min() == y.max():
        raise ValueError("single-class training set")

    Xt = np.ascontiguousarray(X.T)

    def grow(t):
        return _grow_tree(X, Xt, y, t, config, kernels)

    workers = workers or os.cpu_count() or 1
    if workers == 1:
        trees = [grow(t) for t in range(config.n_trees)]
    else:
        with ThreadPoolExecutor(workers) as pool:
            trees = list(pool.map(grow, range(config.n_trees)))
    return ForestModel(trees, X.shape[1], config, float(y.mean()))


def predict_proba(model: ForestModel, X, kernels=None) -> np.ndarray:
    """Mean over trees of the reached leaf's positive fraction."""
    kernels = kernels or default_kernels
    X = _as_matrix(X)
    if X.shape[1] != model.feature_count:
        raise ValueError(f"X has {X.shape[1]} columns, model expects {model.feature_count}")
    out = np.zeros(X.shape[0], dtype=np.float64)
    for t in model.trees:
        kernels.accumulate_tree(X, t.feature, t.threshold, t.left, t.right, t.value, out)
    return out / len(model.trees)


def predict(model: ForestModel, X, threshold: float = 0.5, kernels=None) -> np.ndarray:
    return (predict_proba(model, X, kernels) >= threshold).astype(np.int8)


def save_model(model: ForestModel, path):
    sizes = np.asarray([t.n_nodes for t in model.trees], dtype=np.int64)
    meta = {"format_version": FORMAT_VERSION, "feature_count": model.feature_count,
            "class_prior": model.class_prior.hex(), "config": asdict(model.config)}
    with open(path, "wb") as fh:
        np.savez(
            fh,
            meta=np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8),
            sizes=sizes,
            **{name: np.concatenate([getattr(t, name) for t in model.trees])
               for name in ("feature", "threshold", "left", "right", "value")},
        )


def load_model(path) -> ForestModel:
    with np.load(path) as data:
        meta = json.loads(data["meta"].tobytes().decode())
        if meta.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format {meta.get('format_version')}")
        bounds = np.concatenate([[0], np.cumsum(data["sizes"])])
        cols = {name: data[name] for name in ("feature", "threshold", "left", "right", "value")}
    trees = [Tree(*(cols[name][a:b].copy() for name in cols))
             for a, b in zip(bounds[:-1], bounds[1:])]
    return ForestModel(trees, meta["feature_count"], ForestConfig(**meta["config"]),
                       float.fromhex(meta["class_prior"]))
