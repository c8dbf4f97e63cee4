"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``.

Random draws and floating-point expressions follow the compiled code step
for step; the test-suite checks the two backends agree exactly.
"""

import numpy as np

BACKEND = "python"

_CHUNK = 256


class _Uniforms:
    """Sequential reader over a generator's ``next_double`` stream."""

    def __init__(self, bit_generator):
        self._gen = np.random.Generator(bit_generator)
        self._buf = []
        self._pos = 0

    def next(self):
        if self._pos == len(self._buf):
            self._buf = self._gen.random(_CHUNK).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u


def collect_walks(indptr, indices, illicit, seed, k, max_attempts, bit_generator):
    uniforms = _Uniforms(bit_generator)
    indptr = indptr.tolist()
    indices = indices.tolist()
    illicit = illicit.tolist()
    lengths = []
    terminals = []
    attempts = 0
    truncated = False
    while len(lengths) < k:
        if max_attempts >= 0 and attempts >= max_attempts:
            truncated = True
            break
        cur = seed
        length = 0
        while True:
            start = indptr[cur]
            deg = indptr[cur + 1] - start
            if deg == 0:
                break
            if deg == 1:
                j = 0
            else:
                j = int(uniforms.next() * deg)
                if j >= deg:
                    j = deg - 1
            cur = indices[start + j]
            length += 1
            if illicit[cur]:
                lengths.append(length)
                terminals.append(cur)
                break
        attempts += 1
    return (
        np.asarray(lengths, dtype=np.int64),
        np.asarray(terminals, dtype=np.int64),
        attempts,
        truncated,
    )


def best_split(Xt, y, weights, samples, feature_order, max_features):
    n = samples.shape[0]
    if n < 2:
        return -1, 0.0, np.inf
    w = weights[samples]
    p = w * y[samples].astype(np.int64)
    wt = int(w.sum())
    pt = int(p.sum())
    best = (np.inf, -1, 0.0)
    visited = 0
    for f in feature_order.tolist():
        if visited >= max_features:
            break
        x = Xt[f, samples]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        if not xs[0] < xs[-1]:
            continue
        visited += 1
        wl = np.cumsum(w[order])[:-1]
        pl = np.cumsum(p[order])[:-1]
        valid = xs[:-1] < xs[1:]
        wl, pl = wl[valid], pl[valid]
        wr = wt - wl
        pr = pt - pl
        crit = 2.0 * pl * (wl - pl) / wl + 2.0 * pr * (wr - pr) / wr
        i = int(np.argmin(crit))
        c = float(crit[i])
        if c < best[0] or (c == best[0] and f < best[1]):
            lo = xs[:-1][valid][i]
            hi = xs[1:][valid][i]
            thr = lo / 2.0 + hi / 2.0
            if thr == hi:
                thr = lo
            best = (c, f, float(thr))
    return best[1], best[2], best[0]


def accumulate_tree(X, feature, threshold, left, right, value, out):
    node = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    active = left[node] >= 0
    while active.any():
        r = rows[active]
        nd = node[active]
        go_left = X[r, feature[nd]] <= threshold[nd]
        node[active] = np.where(go_left, left[nd], right[nd])
        active = left[node] >= 0
    out += value[node]
