# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled forest kernels. Same contract as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free, qsort

cnp.import_array()


cdef struct Pair:
    double v
    int y


cdef int _cmp_pair(const void* a, const void* b) noexcept nogil:
    cdef double va = (<Pair*>a).v
    cdef double vb = (<Pair*>b).v
    if va < vb:
        return -1
    if va > vb:
        return 1
    return 0


def best_split(const double[:, ::1] X, const signed char[::1] y, const long long[::1] idx,
               const long long[::1] feature_order, int max_features, int min_leaf):
    cdef Py_ssize_t n = idx.shape[0]
    cdef Py_ssize_t n_feat = feature_order.shape[0]
    cdef Py_ssize_t r, i, fi
    cdef long long f
    cdef long long pos = 0
    cdef double best_score = -1.0
    cdef long long best_feature = -1
    cdef double best_threshold = 0.0
    cdef int evaluated = 0
    cdef Py_ssize_t lo = min_leaf - 1
    cdef Py_ssize_t hi = n - min_leaf - 1
    cdef double vmin, vmax, x, score, nl, nr, al, bl, ar, br, thr
    cdef double feat_best
    cdef Py_ssize_t feat_best_i
    cdef long long cum
    cdef Pair* buf

    if n == 0:
        return -1, 0.0
    buf = <Pair*>malloc(n * sizeof(Pair))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            for r in range(n):
                pos += y[idx[r]]
            for fi in range(n_feat):
                if evaluated >= max_features:
                    break
                f = feature_order[fi]
                vmin = X[idx[0], f]
                vmax = vmin
                for r in range(n):
                    x = X[idx[r], f]
                    buf[r].v = x
                    buf[r].y = y[idx[r]]
                    if x < vmin:
                        vmin = x
                    elif x > vmax:
                        vmax = x
                if vmin == vmax:
                    continue
                evaluated += 1
                if hi < lo:
                    continue
                qsort(buf, n, sizeof(Pair), _cmp_pair)
                cum = 0
                for i in range(lo):
                    cum += buf[i].y
                feat_best = -1.0
                feat_best_i = -1
                for i in range(lo, hi + 1):
                    cum += buf[i].y
                    if not buf[i].v < buf[i + 1].v:
                        continue
                    nl = <double>(i + 1)
                    nr = n - nl
                    al = <double>cum
                    bl = nl - al
                    ar = pos - al
                    br = nr - ar
                    score = (al * al + bl * bl) / nl + (ar * ar + br * br) / nr
                    if feat_best_i < 0 or score > feat_best:
                        feat_best = score
                        feat_best_i = i
                if feat_best_i >= 0 and feat_best > best_score:
                    best_score = feat_best
                    best_feature = f
                    thr = (buf[feat_best_i].v + buf[feat_best_i + 1].v) / 2.0
                    if not thr < buf[feat_best_i + 1].v:
                        thr = buf[feat_best_i].v
                    best_threshold = thr
    finally:
        free(buf)
    return best_feature, best_threshold


def apply_tree(const long long[::1] feature, const double[::1] threshold,
               const long long[::1] left, const long long[::1] right, const double[:, ::1] X):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t r
    cdef long long node
    out = np.empty(n, dtype=np.int64)
    cdef long long[::1] o = out
    with nogil:
        for r in range(n):
            node = 0
            while feature[node] >= 0:
                if X[r, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            o[r] = node
    return out
