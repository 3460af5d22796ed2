"""Numba kernels for the layer-0 proximity graph.

The base layer dominates both build and query cost, so it lives in compiled
code operating on flat arrays: ``nbr`` (int32, n x cap) adjacency, ``nbrdist``
(float32, n x cap) stored *squared* distances used for pruning, and ``deg``
(int32, n) degrees. Node ids are view-local (0..n-1, ascending = insertion
order). All candidate ordering is lexicographic on (distance, id), which makes
every build and search deterministic.

Upper layers hold a few dozen nodes at most and are handled in plain Python
(see ann.py).
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _sqdist(vecs, i, q):
    # float32 storage, float64 arithmetic
    d = 0.0
    for t in range(vecs.shape[1]):
        diff = np.float64(vecs[i, t]) - q[t]
        d += diff * diff
    return d


@njit(cache=True)
def _heap_push(keys, rows, size, key, row):
    i = size
    keys[i] = key
    rows[i] = row
    while i > 0:
        p = (i - 1) >> 1
        if keys[p] > keys[i] or (keys[p] == keys[i] and rows[p] > rows[i]):
            keys[p], keys[i] = keys[i], keys[p]
            rows[p], rows[i] = rows[i], rows[p]
            i = p
        else:
            break
    return size + 1


@njit(cache=True)
def _heap_pop(keys, rows, size):
    k0 = keys[0]
    r0 = rows[0]
    size -= 1
    keys[0] = keys[size]
    rows[0] = rows[size]
    i = 0
    while True:
        left = 2 * i + 1
        right = left + 1
        m = i
        if left < size and (
            keys[left] < keys[m] or (keys[left] == keys[m] and rows[left] < rows[m])
        ):
            m = left
        if right < size and (
            keys[right] < keys[m] or (keys[right] == keys[m] and rows[right] < rows[m])
        ):
            m = right
        if m == i:
            break
        keys[m], keys[i] = keys[i], keys[m]
        rows[m], rows[i] = rows[i], rows[m]
        i = m
    return k0, r0, size


@njit(cache=True)
def search_layer0(vecs, nbr, deg, entry, q, ef, limit):
    """Best-first search among nodes with id < limit.

    Returns (dists_sq, ids) of up to ``ef`` nearest found, ascending by
    (distance, id). The result heap is a max-heap realized as a min-heap on
    (-d, -id) so the worst element is always at the top.
    """
    n = vecs.shape[0]
    visited = np.zeros(n, dtype=np.bool_)
    c_keys = np.empty(4096, dtype=np.float64)
    c_ids = np.empty(4096, dtype=np.int64)
    r_keys = np.empty(ef + 1, dtype=np.float64)
    r_ids = np.empty(ef + 1, dtype=np.int64)
    c_size = 0
    r_size = 0

    d0 = _sqdist(vecs, entry, q)
    visited[entry] = True
    c_size = _heap_push(c_keys, c_ids, c_size, d0, entry)
    r_size = _heap_push(r_keys, r_ids, r_size, -d0, -entry)

    while c_size > 0:
        d, u, c_size = _heap_pop(c_keys, c_ids, c_size)
        if r_size >= ef and d > -r_keys[0]:
            break
        for j in range(deg[u]):
            v = nbr[u, j]
            if v >= limit or visited[v]:
                continue
            visited[v] = True
            dv = _sqdist(vecs, v, q)
            accept = r_size < ef
            if not accept:
                wk = -r_keys[0]
                wr = -r_ids[0]
                accept = dv < wk or (dv == wk and v < wr)
            if accept:
                if c_size >= c_keys.shape[0]:
                    nk = np.empty(c_keys.shape[0] * 2, dtype=np.float64)
                    ni = np.empty(c_keys.shape[0] * 2, dtype=np.int64)
                    nk[:c_size] = c_keys[:c_size]
                    ni[:c_size] = c_ids[:c_size]
                    c_keys = nk
                    c_ids = ni
                c_size = _heap_push(c_keys, c_ids, c_size, dv, v)
                r_size = _heap_push(r_keys, r_ids, r_size, -dv, -v)
                if r_size > ef:
                    _, _, r_size = _heap_pop(r_keys, r_ids, r_size)

    out_d = np.empty(r_size, dtype=np.float64)
    out_i = np.empty(r_size, dtype=np.int64)
    m = r_size
    sz = r_size
    for t in range(m):
        k, r, sz = _heap_pop(r_keys, r_ids, sz)
        out_d[m - 1 - t] = -k
        out_i[m - 1 - t] = -r
    return out_d, out_i


@njit(cache=True)
def build_layer0(vecs, entries, m, cap, efc, nbr, nbrdist, deg):
    """Insert nodes 1..n-1 in order, linking each to its m nearest candidates.

    ``entries[i]`` is the layer-0 entry point for node i (computed from the
    upper layers by the caller; always an id < i). Degrees are capped at
    ``cap``; a full adjacency list drops its farthest member by
    (stored distance, id) when a closer node arrives.
    """
    n = vecs.shape[0]
    for i in range(1, n):
        q = vecs[i].astype(np.float64)
        dists, ids = search_layer0(vecs, nbr, deg, entries[i], q, efc, i)
        nlink = min(m, dists.shape[0])
        for t in range(nlink):
            j = ids[t]
            dj = np.float32(dists[t])
            nbr[i, deg[i]] = j
            nbrdist[i, deg[i]] = dj
            deg[i] += 1
            if deg[j] < cap:
                nbr[j, deg[j]] = i
                nbrdist[j, deg[j]] = dj
                deg[j] += 1
            else:
                wi = 0
                wd = nbrdist[j, 0]
                wr = nbr[j, 0]
                for s in range(1, cap):
                    ds = nbrdist[j, s]
                    rs = nbr[j, s]
                    if ds > wd or (ds == wd and rs > wr):
                        wd = ds
                        wr = rs
                        wi = s
                if dj < wd or (dj == wd and i < wr):
                    nbr[j, wi] = i
                    nbrdist[j, wi] = dj
