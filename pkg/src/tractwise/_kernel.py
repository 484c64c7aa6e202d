"""Compiled kernels for regression-tree growth and prediction.

The split search per node sorts each candidate column once and evaluates
every midpoint between consecutive distinct values using prefix sums of the
node-centered targets (centering keeps the one-pass sums accurate).  The
candidate minimizing the loss wins; exact ties resolve to the smallest
feature index, then the smallest threshold, which the ascending scan order
gives for free.

Per-split feature subsampling (used only by forests when enabled) draws from
SplitMix64, a published 64-bit mixing generator, so sampled trees are
bit-reproducible from a single integer seed.
"""

import numpy as np
from numba import njit

# Effectively unlimited depth; trees stop at purity or single-row leaves long
# before this.
NO_DEPTH_LIMIT = 2**62


@njit(cache=True, nogil=True)
def _splitmix64(state):
    """One SplitMix64 step: returns (next_state, nonnegative int64 output)."""
    state = state + np.uint64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return state, np.int64(z >> np.uint64(1))


@njit(cache=True, nogil=True)
def _sample_features(d, k, state):
    """Draw k distinct feature indices (ascending) via partial Fisher-Yates."""
    pool = np.arange(d)
    for i in range(k):
        state, r = _splitmix64(state)
        j = i + r % (d - i)
        pool[i], pool[j] = pool[j], pool[i]
    return np.sort(pool[:k]), state


@njit(cache=True, nogil=True)
def _node_mean_var(y, idx, s, e):
    """Two-pass mean and population variance of y over idx[s:e].

    A node whose targets are all identical is exactly pure: its mean is that
    value and its variance exactly 0.0, with no rounding from the running
    sum (so purity stops and leaf predictions are exact for constants).
    """
    m = e - s
    tot = 0.0
    lo = y[idx[s]]
    hi = lo
    for i in range(s, e):
        v = y[idx[i]]
        tot += v
        if v < lo:
            lo = v
        elif v > hi:
            hi = v
    if lo == hi:
        return lo, 0.0
    mean = tot / m
    acc = 0.0
    for i in range(s, e):
        dv = y[idx[i]] - mean
        acc += dv * dv
    return mean, acc / m


@njit(cache=True, nogil=True)
def _best_split_at(X, y, idx, s, e, feats, min_leaf, weighted, mean):
    """Best (feature, threshold, loss) for the rows idx[s:e], or feature -1.

    Loss is the plain sum of the two child variances, or the size-weighted
    mean of child variances when ``weighted`` is set.  Thresholds are the
    midpoints between consecutive distinct sorted values.
    """
    m = e - s
    best_loss = np.inf
    best_j = np.int64(-1)
    best_t = 0.0
    xs = np.empty(m, np.float64)
    ysc = np.empty(m, np.float64)
    for fi in range(feats.shape[0]):
        j = feats[fi]
        for i in range(m):
            xs[i] = X[idx[s + i], j]
        perm = np.argsort(xs)
        t1 = 0.0
        t2 = 0.0
        for i in range(m):
            v = y[idx[s + perm[i]]] - mean
            ysc[i] = v
            t1 += v
            t2 += v * v
        s1 = 0.0
        s2 = 0.0
        prev = xs[perm[0]]
        for i in range(1, m):
            v = ysc[i - 1]
            s1 += v
            s2 += v * v
            cur = xs[perm[i]]
            if cur != prev:
                nl = i
                nr = m - i
                if nl >= min_leaf and nr >= min_leaf:
                    t = (prev + cur) / 2.0
                    if t > prev:  # adjacent doubles can round the midpoint onto prev
                        sse_l = s2 - s1 * s1 / nl
                        if sse_l < 0.0:
                            sse_l = 0.0
                        r1 = t1 - s1
                        r2 = t2 - s2
                        sse_r = r2 - r1 * r1 / nr
                        if sse_r < 0.0:
                            sse_r = 0.0
                        if weighted:
                            loss = (sse_l + sse_r) / m
                        else:
                            loss = sse_l / nl + sse_r / nr
                        if loss < best_loss:
                            best_loss = loss
                            best_j = j
                            best_t = t
            prev = cur
    return best_j, best_t, best_loss


@njit(cache=True, nogil=True)
def _grow(X, y, max_depth, min_split, min_leaf, weighted, max_features, rng_seed):
    """Grow a tree depth-first; returns flat node arrays and the node count.

    Node 0 is the root; children always get consecutive ids, left first.
    A node becomes a leaf at the depth cap, below the split size, at zero
    target variance, or when no threshold admits two large-enough children.
    """
    n, d = X.shape
    max_nodes = 2 * n
    feat = np.full(max_nodes, -1, np.int64)
    thr = np.zeros(max_nodes, np.float64)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    count = np.zeros(max_nodes, np.int64)
    var = np.zeros(max_nodes, np.float64)
    mean = np.zeros(max_nodes, np.float64)

    idx = np.arange(n)
    all_feats = np.arange(d)
    state = rng_seed

    stack = np.empty((max_nodes, 4), np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        nid = stack[top, 0]
        s = stack[top, 1]
        e = stack[top, 2]
        depth = stack[top, 3]
        m = e - s

        mu, v = _node_mean_var(y, idx, s, e)
        count[nid] = m
        var[nid] = v
        mean[nid] = mu

        if depth >= max_depth or m < min_split or v <= 0.0:
            continue

        if 0 < max_features < d:
            feats, state = _sample_features(d, max_features, state)
        else:
            feats = all_feats
        bj, bt, _ = _best_split_at(X, y, idx, s, e, feats, min_leaf, weighted, mu)
        if bj < 0:
            continue

        tmp = np.empty(m, np.int64)
        nl = 0
        for i in range(s, e):
            if X[idx[i], bj] < bt:
                tmp[nl] = idx[i]
                nl += 1
        pos = nl
        for i in range(s, e):
            if X[idx[i], bj] >= bt:
                tmp[pos] = idx[i]
                pos += 1
        for i in range(m):
            idx[s + i] = tmp[i]

        feat[nid] = bj
        thr[nid] = bt
        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        left[nid] = lid
        right[nid] = rid

        stack[top, 0] = rid
        stack[top, 1] = s + nl
        stack[top, 2] = e
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = lid
        stack[top, 1] = s
        stack[top, 2] = s + nl
        stack[top, 3] = depth + 1
        top += 1

    return (
        feat[:n_nodes].copy(),
        thr[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        count[:n_nodes].copy(),
        var[:n_nodes].copy(),
        mean[:n_nodes].copy(),
    )


@njit(cache=True, nogil=True)
def _best_split_root(X, y, min_leaf, weighted):
    """Split search over all rows and features (the public best_split path)."""
    n, d = X.shape
    idx = np.arange(n)
    mu, v = _node_mean_var(y, idx, 0, n)
    if v <= 0.0:
        return np.int64(-1), 0.0, np.inf
    return _best_split_at(X, y, idx, 0, n, np.arange(d), min_leaf, weighted, mu)


@njit(cache=True, nogil=True)
def _predict_rows(feat, thr, left, right, mean, X, out):
    """Route every row of X to its leaf; equality with a threshold goes right."""
    for i in range(X.shape[0]):
        nid = 0
        while feat[nid] >= 0:
            if X[i, feat[nid]] < thr[nid]:
                nid = left[nid]
            else:
                nid = right[nid]
        out[i] = mean[nid]
