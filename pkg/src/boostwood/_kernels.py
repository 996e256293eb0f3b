"""Compiled kernels for subsample drawing, tree growing and tree evaluation.

Trees are stored packed: one row per tree in (B, max_nodes) arrays where
`feature[b, s] == -1` marks a leaf. Node 0 is the root; children indices are
local to the tree. All kernels are deterministic given the seed arrays and
independent of the worker count (each tree only touches its own row).

Per-node randomness is keyed by the node's *path* from the root (a hash
chain folding in left/right turns), not by a shared sequential stream. This
makes a depth-capped tree agree exactly with the truncation of the uncapped
tree grown from the same seed.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

_U = np.uint64
_GOLD = _U(0x9E3779B97F4A7C15)
_K1 = _U(0xBF58476D1CE4E5B9)
_K2 = _U(0x94D049BB133111EB)
_S30 = _U(30)
_S27 = _U(27)
_S31 = _U(31)


@njit(cache=True, inline="always")
def _sm_next(state):
    state = state + _GOLD
    z = state
    z = (z ^ (z >> _S30)) * _K1
    z = (z ^ (z >> _S27)) * _K2
    return state, z ^ (z >> _S31)


@njit(cache=True, inline="always")
def _rand_below(state, bound):
    state, z = _sm_next(state)
    return state, z % bound


@njit(cache=True, inline="always")
def _child_key(key, side):
    z = key ^ (side * _K1 + _GOLD)
    z = (z ^ (z >> _S30)) * _K2
    return z ^ (z >> _S31)


@njit(cache=True, parallel=True)
def draw_subsamples(n, k, seeds):
    """Draw one size-k index set per seed, without replacement."""
    B = seeds.shape[0]
    out = np.empty((B, k), dtype=np.int64)
    for b in prange(B):
        state = seeds[b]
        perm = np.arange(n)
        for t in range(k):
            state, r = _rand_below(state, _U(n - t))
            j = t + np.int64(r)
            tmp = perm[t]
            perm[t] = perm[j]
            perm[j] = tmp
            out[b, t] = perm[t]
    return out


@njit(cache=True, parallel=True)
def draw_bootstraps(n, seeds):
    """Draw one size-n index multiset per seed, with replacement."""
    B = seeds.shape[0]
    out = np.empty((B, n), dtype=np.int64)
    for b in prange(B):
        state = seeds[b]
        for t in range(n):
            state, r = _rand_below(state, _U(n))
            out[b, t] = np.int64(r)
    return out


@njit(cache=True, inline="always")
def _insertion_sort_pairs(vals, ys, lo, hi):
    for i in range(lo + 1, hi + 1):
        v = vals[i]
        w = ys[i]
        j = i - 1
        while j >= lo and vals[j] > v:
            vals[j + 1] = vals[j]
            ys[j + 1] = ys[j]
            j -= 1
        vals[j + 1] = v
        ys[j + 1] = w


@njit(cache=True)
def _sort_pairs(vals, ys, m, st_lo, st_hi):
    """Sort vals[:m] ascending, permuting ys identically. In place,
    allocation-free (uses caller-provided stack scratch)."""
    if m < 2:
        return
    sp = 0
    st_lo[0] = 0
    st_hi[0] = m - 1
    sp = 1
    while sp > 0:
        sp -= 1
        lo = st_lo[sp]
        hi = st_hi[sp]
        while hi - lo > 16:
            mid = (lo + hi) // 2
            # median-of-three pivot, moved to position lo
            if vals[mid] < vals[lo]:
                vals[mid], vals[lo] = vals[lo], vals[mid]
                ys[mid], ys[lo] = ys[lo], ys[mid]
            if vals[hi] < vals[lo]:
                vals[hi], vals[lo] = vals[lo], vals[hi]
                ys[hi], ys[lo] = ys[lo], ys[hi]
            if vals[hi] < vals[mid]:
                vals[hi], vals[mid] = vals[mid], vals[hi]
                ys[hi], ys[mid] = ys[mid], ys[hi]
            pivot = vals[mid]
            i = lo
            j = hi
            while i <= j:
                while vals[i] < pivot:
                    i += 1
                while vals[j] > pivot:
                    j -= 1
                if i <= j:
                    vals[i], vals[j] = vals[j], vals[i]
                    ys[i], ys[j] = ys[j], ys[i]
                    i += 1
                    j -= 1
            # recurse into the smaller side, loop on the larger
            if j - lo < hi - i:
                if i < hi:
                    st_lo[sp] = i
                    st_hi[sp] = hi
                    sp += 1
                hi = j
            else:
                if lo < j:
                    st_lo[sp] = lo
                    st_hi[sp] = j
                    sp += 1
                lo = i
        _insertion_sort_pairs(vals, ys, lo, hi)


@njit(cache=True)
def _grow_tree(X, y, idx, seed, mtry, min_leaf, max_depth, split_tries,
               feat, thr, left, right, value):
    """Grow one least-squares tree on the sample multiset `idx`.

    Splits greedily minimise total child SSE over `mtry` features drawn per
    node; candidate thresholds are midpoints of consecutive distinct sorted
    values (all of them, or `split_tries` random ones). Ties resolve to the
    lowest feature index, then the smallest threshold. Returns node count.
    """
    k = idx.shape[0]
    d = X.shape[1]
    order = idx.copy()
    buf = np.empty(k, dtype=np.int64)
    vals = np.empty(k, dtype=np.float64)
    ys = np.empty(k, dtype=np.float64)
    csum = np.empty(k + 1, dtype=np.float64)
    csq = np.empty(k + 1, dtype=np.float64)
    fperm = np.empty(d, dtype=np.int64)
    qs_lo = np.empty(64, dtype=np.int64)
    qs_hi = np.empty(64, dtype=np.int64)

    cap = feat.shape[0]
    st_slot = np.empty(cap, dtype=np.int64)
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    st_key = np.empty(cap, dtype=np.uint64)

    n_nodes = 1
    sp = 0
    st_slot[0] = 0
    st_start[0] = 0
    st_end[0] = k
    st_depth[0] = 0
    st_key[0] = seed
    sp = 1

    while sp > 0:
        sp -= 1
        slot = st_slot[sp]
        start = st_start[sp]
        end = st_end[sp]
        depth = st_depth[sp]
        key = st_key[sp]

        m = end - start
        tot = 0.0
        ymin = np.inf
        ymax = -np.inf
        for t in range(start, end):
            v = y[order[t]]
            tot += v
            if v < ymin:
                ymin = v
            if v > ymax:
                ymax = v
        mean = tot / m
        value[slot] = mean
        feat[slot] = -1

        if m < 2 * min_leaf or ymin == ymax:
            continue
        if max_depth > 0 and depth >= max_depth:
            continue

        # Feature subset for this node: partial Fisher-Yates, then ascending.
        for i in range(d):
            fperm[i] = i
        state = key
        for t in range(mtry):
            state, r = _rand_below(state, _U(d - t))
            j = t + np.int64(r)
            tmpf = fperm[t]
            fperm[t] = fperm[j]
            fperm[j] = tmpf
        for i in range(1, mtry):
            fv = fperm[i]
            j = i - 1
            while j >= 0 and fperm[j] > fv:
                fperm[j + 1] = fperm[j]
                j -= 1
            fperm[j + 1] = fv

        best_sse = np.inf
        best_f = -1
        best_thr = 0.0
        for fi in range(mtry):
            f = fperm[fi]
            for t in range(m):
                o = order[start + t]
                vals[t] = X[o, f]
                ys[t] = y[o]
            _sort_pairs(vals, ys, m, qs_lo, qs_hi)
            csum[0] = 0.0
            csq[0] = 0.0
            for t in range(m):
                yy = ys[t]
                csum[t + 1] = csum[t] + yy
                csq[t + 1] = csq[t] + yy * yy
            tsum = csum[m]
            tsq = csq[m]
            lo = min_leaf
            hi = m - min_leaf  # split sizes i in [lo, hi]
            if split_tries <= 0:
                for i in range(lo, hi + 1):
                    va = vals[i - 1]
                    vb = vals[i]
                    if vb <= va:
                        continue
                    ls = csum[i]
                    rs = tsum - ls
                    sse = (csq[i] - ls * ls / i) + \
                        ((tsq - csq[i]) - rs * rs / (m - i))
                    if sse < best_sse:
                        best_sse = sse
                        best_f = f
                        best_thr = 0.5 * (va + vb)
            else:
                span = _U(hi - lo + 1)
                for _ in range(split_tries):
                    state, r = _rand_below(state, span)
                    i = lo + np.int64(r)
                    va = vals[i - 1]
                    vb = vals[i]
                    if vb <= va:
                        continue
                    ls = csum[i]
                    rs = tsum - ls
                    sse = (csq[i] - ls * ls / i) + \
                        ((tsq - csq[i]) - rs * rs / (m - i))
                    if sse < best_sse or (sse == best_sse and
                                          (f < best_f or
                                           (f == best_f and
                                            0.5 * (va + vb) < best_thr))):
                        best_sse = sse
                        best_f = f
                        best_thr = 0.5 * (va + vb)

        if best_f < 0:
            continue  # no admissible split: all tried features constant

        p = 0
        for t in range(start, end):
            o = order[t]
            if X[o, best_f] <= best_thr:
                buf[p] = o
                p += 1
        q = p
        for t in range(start, end):
            o = order[t]
            if X[o, best_f] > best_thr:
                buf[q] = o
                q += 1
        for t in range(m):
            order[start + t] = buf[t]

        lslot = n_nodes
        rslot = n_nodes + 1
        n_nodes += 2
        feat[slot] = best_f
        thr[slot] = best_thr
        left[slot] = lslot
        right[slot] = rslot

        st_slot[sp] = rslot
        st_start[sp] = start + p
        st_end[sp] = end
        st_depth[sp] = depth + 1
        st_key[sp] = _child_key(key, _U(2))
        sp += 1
        st_slot[sp] = lslot
        st_start[sp] = start
        st_end[sp] = start + p
        st_depth[sp] = depth + 1
        st_key[sp] = _child_key(key, _U(1))
        sp += 1

    return n_nodes


@njit(cache=True, parallel=True)
def grow_forest(X, y, indices, seeds, mtry, min_leaf, max_depth, split_tries,
                max_nodes):
    B = indices.shape[0]
    feat = np.full((B, max_nodes), -1, dtype=np.int64)
    thr = np.zeros((B, max_nodes), dtype=np.float64)
    left = np.full((B, max_nodes), -1, dtype=np.int64)
    right = np.full((B, max_nodes), -1, dtype=np.int64)
    value = np.zeros((B, max_nodes), dtype=np.float64)
    n_nodes = np.zeros(B, dtype=np.int64)
    for b in prange(B):
        n_nodes[b] = _grow_tree(X, y, indices[b], seeds[b], mtry, min_leaf,
                                max_depth, split_tries, feat[b], thr[b],
                                left[b], right[b], value[b])
    return feat, thr, left, right, value, n_nodes


@njit(cache=True, inline="always")
def _route(feat, thr, left, right, x):
    node = 0
    while feat[node] >= 0:
        if x[feat[node]] <= thr[node]:
            node = left[node]
        else:
            node = right[node]
    return node


@njit(cache=True, parallel=True)
def predict_matrix(feat, thr, left, right, value, Xq):
    """Per-tree predictions: out[b, i] = tree b evaluated at query row i."""
    B = feat.shape[0]
    m = Xq.shape[0]
    out = np.empty((B, m), dtype=np.float64)
    for b in prange(B):
        for i in range(m):
            out[b, i] = value[b, _route(feat[b], thr[b], left[b], right[b],
                                        Xq[i])]
    return out


@njit(cache=True, parallel=True)
def oob_accumulate(feat, thr, left, right, value, inclusion, X):
    """Per training row: sum/count of predictions from trees whose sample
    excludes the row, plus the all-tree sum (for the fallback mean)."""
    B = feat.shape[0]
    n = X.shape[0]
    oob_sum = np.zeros(n, dtype=np.float64)
    oob_cnt = np.zeros(n, dtype=np.int64)
    full_sum = np.zeros(n, dtype=np.float64)
    for i in prange(n):
        s = 0.0
        c = 0
        tot = 0.0
        for b in range(B):
            pred = value[b, _route(feat[b], thr[b], left[b], right[b], X[i])]
            tot += pred
            if inclusion[i, b] == 0:
                s += pred
                c += 1
        oob_sum[i] = s
        oob_cnt[i] = c
        full_sum[i] = tot
    return oob_sum, oob_cnt, full_sum
