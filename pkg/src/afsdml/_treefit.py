"""Compiled kernels for CART fitting and prediction.

Greedy MSE splitting with thresholds at midpoints of consecutive distinct
sorted feature values. Sorting and partitioning are stable, so results are
bit-identical for identical inputs regardless of threading. Kernels release
the GIL so forests can be fitted from worker threads.
"""

from __future__ import annotations

import numpy as np
from numba import njit

LEAF = -1


@njit(cache=True, nogil=True)
def _next_u64(s):
    # xorshift64; local state keeps feature subsampling thread-safe
    s = np.uint64(s)
    s ^= s << np.uint64(13)
    s ^= s >> np.uint64(7)
    s ^= s << np.uint64(17)
    return s


@njit(cache=True, nogil=True)
def fit_kernel(X, y, max_depth, min_split, min_leaf, max_features, rng_seed):
    m, nfeat = X.shape
    max_nodes = 2 * m + 1
    feature = np.full(max_nodes, LEAF, np.int64)
    threshold = np.zeros(max_nodes, np.float64)
    left = np.full(max_nodes, LEAF, np.int64)
    right = np.full(max_nodes, LEAF, np.int64)
    value = np.zeros(max_nodes, np.float64)
    n_samples = np.zeros(max_nodes, np.int64)
    node_depth = np.zeros(max_nodes, np.int64)

    idx = np.arange(m)
    scratch = np.empty(m, np.int64)
    feat_order = np.arange(nfeat)
    use_all = max_features >= nfeat
    rng = np.uint64(rng_seed if rng_seed != 0 else 0x9E3779B97F4A7C15)

    stack = np.zeros((max_nodes, 4), np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = m
    stack[0, 3] = 0
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        cnt = end - start

        s = 0.0
        ymin = y[idx[start]]
        ymax = ymin
        for j in range(start, end):
            v = y[idx[j]]
            s += v
            if v < ymin:
                ymin = v
            if v > ymax:
                ymax = v
        value[node] = s / cnt
        n_samples[node] = cnt
        node_depth[node] = depth

        if depth >= max_depth or cnt < min_split or ymin == ymax:
            continue

        if not use_all:
            # partial Fisher-Yates over the feature list
            for j in range(nfeat):
                feat_order[j] = j
            for j in range(max_features):
                rng = _next_u64(rng)
                pick = j + int(rng % np.uint64(nfeat - j))
                feat_order[j], feat_order[pick] = feat_order[pick], feat_order[j]
            feat_order[:max_features].sort()

        n_try = nfeat if use_all else max_features
        best_score = np.inf
        best_f = -1
        best_thr = 0.0
        xs = np.empty(cnt, np.float64)
        ys = np.empty(cnt, np.float64)
        for fi in range(n_try):
            f = feat_order[fi] if not use_all else fi
            for j in range(cnt):
                xs[j] = X[idx[start + j], f]
            order = np.argsort(xs, kind="mergesort")
            # Neumaier-compensated sums: scores depend only on the partition
            # (as a multiset), not on accumulation order, so ties between
            # features that induce the same partition stay exact ties and the
            # lowest-feature rule decides them.
            tot1 = 0.0
            ctot1 = 0.0
            tot2 = 0.0
            ctot2 = 0.0
            for j in range(cnt):
                v = y[idx[start + order[j]]]
                ys[j] = v
                t = tot1 + v
                if abs(tot1) >= abs(v):
                    ctot1 += (tot1 - t) + v
                else:
                    ctot1 += (v - t) + tot1
                tot1 = t
                v2 = v * v
                t = tot2 + v2
                if abs(tot2) >= abs(v2):
                    ctot2 += (tot2 - t) + v2
                else:
                    ctot2 += (v2 - t) + tot2
                tot2 = t
            tot1 += ctot1
            tot2 += ctot2
            xsorted = np.empty(cnt, np.float64)
            for j in range(cnt):
                xsorted[j] = xs[order[j]]
            s1 = 0.0
            c1 = 0.0
            s2 = 0.0
            c2 = 0.0
            for j in range(cnt - 1):
                v = ys[j]
                t = s1 + v
                if abs(s1) >= abs(v):
                    c1 += (s1 - t) + v
                else:
                    c1 += (v - t) + s1
                s1 = t
                v2 = v * v
                t = s2 + v2
                if abs(s2) >= abs(v2):
                    c2 += (s2 - t) + v2
                else:
                    c2 += (v2 - t) + s2
                s2 = t
                if xsorted[j] == xsorted[j + 1]:
                    continue
                nl = j + 1
                nr = cnt - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                sl1 = s1 + c1
                sl2 = s2 + c2
                sse_l = sl2 - sl1 * sl1 / nl
                r1 = tot1 - sl1
                r2 = tot2 - sl2
                sse_r = r2 - r1 * r1 / nr
                score = sse_l + sse_r
                # strict < keeps the lowest feature index / lowest threshold on ties
                if score < best_score:
                    best_score = score
                    best_f = f
                    best_thr = 0.5 * (xsorted[j] + xsorted[j + 1])

        if best_f < 0:
            continue

        # stable partition of idx[start:end] around the chosen threshold
        nl = 0
        for j in range(start, end):
            if X[idx[j], best_f] <= best_thr:
                scratch[nl] = idx[j]
                nl += 1
        k = nl
        for j in range(start, end):
            if X[idx[j], best_f] > best_thr:
                scratch[k] = idx[j]
                k += 1
        for j in range(cnt):
            idx[start + j] = scratch[j]

        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = lid
        right[node] = rid
        stack[top, 0] = rid
        stack[top, 1] = start + nl
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = lid
        stack[top, 1] = start
        stack[top, 2] = start + nl
        stack[top, 3] = depth + 1
        top += 1

    return (
        feature[:n_nodes],
        threshold[:n_nodes],
        left[:n_nodes],
        right[:n_nodes],
        value[:n_nodes],
        n_samples[:n_nodes],
        node_depth[:n_nodes],
    )


@njit(cache=True, nogil=True)
def predict_kernel(feature, threshold, left, right, value, X):
    n = X.shape[0]
    out = np.empty(n, np.float64)
    for i in range(n):
        node = 0
        while feature[node] != LEAF:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out
