"""Pure numpy implementations of the forest kernels.

Mirrors ``_kernels_c.pyx`` operation for operation so both backends grow
identical trees: the split score is evaluated with the same float64 expression
and ties resolve to the first candidate in scan order.
"""

from __future__ import annotations

import numpy as np


def best_split(X, y, idx, feature_order, max_features, min_leaf):
    """Best gini split of the rows ``idx``.

    Scans ``feature_order`` and stops after ``max_features`` features that are
    not constant on these rows. Returns ``(feature, threshold)``, or
    ``(-1, 0.0)`` when no split leaves ``min_leaf`` rows on both sides.
    The left child takes rows with ``x <= threshold``.
    """
    n = idx.shape[0]
    labels_all = y[idx]
    pos = int(labels_all.sum())
    best_score = -1.0
    best_feature = -1
    best_threshold = 0.0
    evaluated = 0
    lo = min_leaf - 1
    hi = n - min_leaf - 1  # inclusive
    for f in feature_order:
        if evaluated >= max_features:
            break
        values = X[idx, f]
        if values.min() == values.max():
            continue
        evaluated += 1
        if hi < lo:
            continue
        order = np.argsort(values, kind="stable")
        v = values[order]
        cpos = np.cumsum(labels_all[order]).astype(np.float64)
        cand = np.arange(lo, hi + 1)
        valid = v[cand] < v[cand + 1]
        if not valid.any():
            continue
        cand = cand[valid]
        n_left = (cand + 1).astype(np.float64)
        n_right = n - n_left
        a_left = cpos[cand]
        b_left = n_left - a_left
        a_right = pos - a_left
        b_right = n_right - a_right
        score = (a_left * a_left + b_left * b_left) / n_left + (a_right * a_right + b_right * b_right) / n_right
        j = int(np.argmax(score))
        if score[j] > best_score:
            i = cand[j]
            best_score = float(score[j])
            best_feature = int(f)
            lo_v = v[i]
            hi_v = v[i + 1]
            thr = (lo_v + hi_v) / 2.0
            if not thr < hi_v:
                thr = lo_v
            best_threshold = float(thr)
    return best_feature, best_threshold


def apply_tree(feature, threshold, left, right, X):
    """Leaf node index reached by every row of ``X``."""
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int64)
    active = np.arange(n)
    while active.size:
        cur = node[active]
        f = feature[cur]
        leaf = f < 0
        active = active[~leaf]
        cur = cur[~leaf]
        f = f[~leaf]
        go_left = X[active, f] <= threshold[cur]
        node[active] = np.where(go_left, left[cur], right[cur])
    return node
