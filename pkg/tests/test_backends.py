import os
import subprocess
import sys

import numpy as np
import pytest

from taintwalk._backend import get_kernels


@pytest.fixture(scope="module")
def both():
    try:
        return get_kernels("python"), get_kernels("cython")
    except ImportError:
        pytest.skip("compiled kernels not built")


def random_csr(rng, n):
    indptr, indices = [0], []
    for i in range(n):
        if i:
            k = min(i, int(rng.integers(0, 5)))
            indices += sorted(rng.choice(i, size=k, replace=False).tolist())
        indptr.append(len(indices))
    return np.asarray(indptr, dtype=np.int64), np.asarray(indices, dtype=np.int64)


def test_walk_kernels_agree(both):
    py, cy = both
    rng = np.random.default_rng(0)
    for trial in range(20):
        indptr, indices = random_csr(rng, 80)
        illicit = (rng.random(80) < 0.15).astype(np.uint8)
        for seed in range(0, 80, 7):
            args = (indptr, indices, illicit, seed, 25, 400)
            a = py.collect_walks(*args, np.random.PCG64(trial * 100 + seed))
            b = cy.collect_walks(*args, np.random.PCG64(trial * 100 + seed))
            assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
            assert a[2:] == b[2:]


def test_split_kernels_agree(both):
    py, cy = both
    rng = np.random.default_rng(1)
    for _ in range(100):
        n, f = int(rng.integers(2, 200)), int(rng.integers(1, 8))
        X = np.ascontiguousarray(rng.integers(0, 6, (n, f)) / rng.integers(1, 4))
        y = rng.integers(0, 2, n).astype(np.uint8)
        w = rng.integers(0, 3, n).astype(np.int64)
        samples = np.flatnonzero(w).astype(np.int64)
        order = rng.permutation(f).astype(np.int64)
        m = int(rng.integers(1, f + 1))
        Xt = np.ascontiguousarray(X.T)
        assert py.best_split(Xt, y, w, samples, order, m) == cy.best_split(Xt, y, w, samples,
                                                                           order, m)


def test_route_kernels_agree(both):
    py, cy = both
    # depth-2 tree: x0 <= 0 -> (x1 <= 0.5 ? 0.1 : 0.2) else 0.9
    feature = np.array([0, 1, -1, -1, -1], dtype=np.int64)
    threshold = np.array([0.0, 0.5, 0, 0, 0])
    left = np.array([1, 3, -1, -1, -1], dtype=np.int64)
    right = np.array([2, 4, -1, -1, -1], dtype=np.int64)
    value = np.array([0.5, 0.5, 0.9, 0.1, 0.2])
    X = np.ascontiguousarray(np.random.default_rng(2).normal(size=(500, 2)))
    outs = []
    for k in (py, cy):
        out = np.zeros(500)
        k.accumulate_tree(X, feature, threshold, left, right, value, out)
        outs.append(out)
    assert np.array_equal(*outs)
    expect = np.where(X[:, 0] <= 0, np.where(X[:, 1] <= 0.5, 0.1, 0.2), 0.9)
    assert np.array_equal(outs[0], expect)


def test_env_selects_fallback():
    code = "import taintwalk; print(taintwalk.BACKEND)"
    env = dict(os.environ, TAINTWALK_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
