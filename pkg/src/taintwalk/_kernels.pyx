# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: walk sampling, split search and tree routing.

Every routine here has a twin in ``_fallback`` that consumes random numbers
and evaluates floating-point expressions in the same order, so the two
backends agree bit for bit.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport INFINITY, log2
from libc.stdint cimport int64_t, uint8_t
from libc.stdlib cimport free, malloc
from numpy.random cimport bitgen_t

cnp.import_array()

BACKEND = "cython"


cdef bitgen_t *_bitgen(object bit_generator) except NULL:
    capsule = bit_generator.capsule
    return <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")


def collect_walks(const int64_t[::1] indptr, const int64_t[::1] indices,
                  const uint8_t[::1] illicit, int64_t seed, int64_t k,
                  int64_t max_attempts, object bit_generator):
    """Walk backwards from ``seed`` until ``k`` walks end on an illicit node.

    ``max_attempts < 0`` means unbounded. Returns
    ``(lengths, terminals, attempts, truncated)`` where ``lengths`` and
    ``terminals`` hold one entry per successful walk.
    """
    cdef bitgen_t *rng = _bitgen(bit_generator)
    lengths_arr = np.empty(k, dtype=np.int64)
    terminals_arr = np.empty(k, dtype=np.int64)
    cdef int64_t[::1] lengths = lengths_arr
    cdef int64_t[::1] terminals = terminals_arr
    cdef int64_t n_success = 0, attempts = 0
    cdef int64_t cur, length, start, deg, j
    cdef double u
    cdef bint truncated = False

    with nogil:
        while n_success < k:
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
                    u = rng.next_double(rng.state)
                    j = <int64_t> (u * deg)
                    if j >= deg:
                        j = deg - 1
                cur = indices[start + j]
                length += 1
                if illicit[cur]:
                    lengths[n_success] = length
                    terminals[n_success] = cur
                    n_success += 1
                    break
            attempts += 1

    return lengths_arr[:n_success], terminals_arr[:n_success], attempts, bool(truncated)


cdef struct SortItem:
    double x
    int64_t w
    int64_t p


cdef inline void _swap(SortItem *a, Py_ssize_t i, Py_ssize_t j) noexcept nogil:
    cdef SortItem t = a[i]
    a[i] = a[j]
    a[j] = t


cdef inline double _median3(SortItem *a, Py_ssize_t n) noexcept nogil:
    cdef double x = a[0].x, y = a[n // 2].x, z = a[n - 1].x
    if x < y:
        if y < z:
            return y
        return z if x < z else x
    if x < z:
        return x
    return z if y < z else y


cdef void _sort_items(SortItem *a, Py_ssize_t n, int depth) noexcept nogil:
    # introsort on .x: three-way quicksort, heapsort past the depth limit
    cdef double pivot
    cdef Py_ssize_t i, lt, gt, r
    while n > 16:
        if depth == 0:
            _heapsort(a, n)
            return
        depth -= 1
        pivot = _median3(a, n)
        i = 0
        lt = 0
        gt = n
        while i < gt:
            if a[i].x < pivot:
                _swap(a, i, lt)
                i += 1
                lt += 1
            elif a[i].x > pivot:
                gt -= 1
                _swap(a, i, gt)
            else:
                i += 1
        _sort_items(a, lt, depth)
        a += gt
        n -= gt
    for i in range(1, n):
        r = i
        while r > 0 and a[r].x < a[r - 1].x:
            _swap(a, r, r - 1)
            r -= 1


cdef void _sift_down(SortItem *a, Py_ssize_t start, Py_ssize_t end) noexcept nogil:
    cdef Py_ssize_t child, root = start
    while True:
        child = 2 * root + 1
        if child >= end:
            return
        if child + 1 < end and a[child].x < a[child + 1].x:
            child += 1
        if a[root].x < a[child].x:
            _swap(a, root, child)
            root = child
        else:
            return


cdef void _heapsort(SortItem *a, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t start = (n - 2) // 2, end = n - 1
    while start >= 0:
        _sift_down(a, start, n)
        start -= 1
    while end > 0:
        _swap(a, 0, end)
        _sift_down(a, 0, end)
        end -= 1


def best_split(const double[:, ::1] Xt, const uint8_t[::1] y,
               const int64_t[::1] weights, const int64_t[::1] samples,
               const int64_t[::1] feature_order, int64_t max_features):
    """Best Gini split of ``samples`` over candidate features.

    ``Xt`` is the feature-major (transposed) training matrix.

    Features are visited in ``feature_order``; constant features do not count
    towards ``max_features``. Returns ``(feature, threshold, criterion)`` with
    ``feature == -1`` when no split exists. The criterion is the weighted
    child impurity sum ``2 pl (wl - pl) / wl + 2 pr (wr - pr) / wr``; ties
    resolve to the lowest feature index, then the lowest threshold.
    """
    cdef Py_ssize_t n = samples.shape[0]
    cdef Py_ssize_t n_feat = feature_order.shape[0]
    cdef Py_ssize_t i, fi
    cdef int64_t f, s, visited = 0
    cdef int64_t wt = 0, pt = 0, wl, pl, wr, pr
    cdef double crit, thr
    cdef double best_crit = INFINITY, best_thr = 0.0
    cdef int64_t best_feat = -1
    cdef SortItem *items

    if n < 2:
        return -1, 0.0, INFINITY

    items = <SortItem *> malloc(n * sizeof(SortItem))
    if items == NULL:
        raise MemoryError()

    with nogil:
        for i in range(n):
            s = samples[i]
            wt += weights[s]
            pt += weights[s] * y[s]
        for fi in range(n_feat):
            if visited >= max_features:
                break
            f = feature_order[fi]
            for i in range(n):
                s = samples[i]
                items[i].x = Xt[f, s]
                items[i].w = weights[s]
                items[i].p = weights[s] * y[s]
            _sort_items(items, n, 2 * <int> log2(<double> n) + 2)
            if not (items[0].x < items[n - 1].x):
                continue
            visited += 1
            wl = 0
            pl = 0
            for i in range(n - 1):
                wl += items[i].w
                pl += items[i].p
                if not (items[i].x < items[i + 1].x):
                    continue
                wr = wt - wl
                pr = pt - pl
                crit = 2.0 * pl * (wl - pl) / wl + 2.0 * pr * (wr - pr) / wr
                if crit < best_crit or (crit == best_crit and f < best_feat):
                    thr = items[i].x / 2.0 + items[i + 1].x / 2.0
                    if thr == items[i + 1].x:
                        thr = items[i].x
                    best_crit = crit
                    best_feat = f
                    best_thr = thr
    free(items)
    return best_feat, best_thr, best_crit


def accumulate_tree(const double[:, ::1] X, const int64_t[::1] feature,
                    const double[::1] threshold, const int64_t[::1] left,
                    const int64_t[::1] right, const double[::1] value,
                    double[::1] out):
    """Add each row's leaf value for one tree into ``out``."""
    cdef Py_ssize_t n = X.shape[0], r
    cdef int64_t node
    with nogil:
        for r in range(n):
            node = 0
            while left[node] >= 0:
                if X[r, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            out[r] += value[node]
