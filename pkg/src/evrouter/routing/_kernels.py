"""Compiled search loops.

All kernels evaluate edge costs on the fly from the CSR arrays and a
``(pattern, 3)`` coefficient table, so no per-query cost array is built.
Vertex arguments are dense indices.
"""
from __future__ import annotations

import numpy as np
from numba import njit

# stats slots
SETTLED, SCANNED, RELAXED, PUSHES, CLAMPS, FIRST_CLAMP, ROUNDS, MAX_HOPS = range(8)
N_STATS = 8


@njit(cache=True, nogil=True, inline="always")
def _cost(k, lengths, dh, codes, coef):
    length = lengths[k]
    s = dh[k] / length
    c = codes[k]
    return (coef[c, 0] * s * s + coef[c, 1] * s + coef[c, 2]) * (length / 100.0)


@njit(cache=True, nogil=True, inline="always")
def _less(key, a, b):
    # lowest C first, lowest vertex index among equal C
    return key[a] < key[b] or (key[a] == key[b] and a < b)


@njit(cache=True, nogil=True)
def _sift_up(heap, pos, key, i):
    v = heap[i]
    while i > 0:
        parent = (i - 1) >> 1
        p = heap[parent]
        if not _less(key, v, p):
            break
        heap[i] = p
        pos[p] = i
        i = parent
    heap[i] = v
    pos[v] = i


@njit(cache=True, nogil=True)
def _sift_down(heap, pos, key, i, size):
    v = heap[i]
    while True:
        child = 2 * i + 1
        if child >= size:
            break
        right = child + 1
        if right < size and _less(key, heap[right], heap[child]):
            child = right
        c = heap[child]
        if not _less(key, c, v):
            break
        heap[i] = c
        pos[c] = i
        i = child
    heap[i] = v
    pos[v] = i


@njit(cache=True, nogil=True)
def dijkstra_energy_kernel(
    offsets, heads, lengths, dh, codes, coef, shift_k, potential,
    src, dst, e_init, e_max, tol,
):
    """Energy-optimal Dijkstra keyed on reduced cost.

    The gate and the battery cap use the raw edge cost, the queue uses the
    reduced cost ``max(0, cost - shift)`` with
    ``shift = shift_k * dh / 100 + potential[v] - potential[u]``.  ``dst < 0`` searches
    one-to-all.
    """
    n = offsets.shape[0] - 1
    C = np.full(n, np.inf)
    E = np.full(n, -np.inf)
    pred = np.full(n, -1, np.int64)
    pred_edge = np.full(n, -1, np.int64)
    heap = np.empty(n, np.int64)
    pos = np.full(n, -1, np.int64)
    order = np.empty(n, np.int64)
    stats = np.zeros(N_STATS, np.int64)
    stats[FIRST_CLAMP] = -1

    C[src] = 0.0
    E[src] = e_init
    heap[0] = src
    pos[src] = 0
    size = 1
    stats[PUSHES] = 1
    n_order = 0
    while size > 0:
        u = heap[0]
        pos[u] = -1
        size -= 1
        if size > 0:
            heap[0] = heap[size]
            pos[heap[0]] = 0
            _sift_down(heap, pos, C, 0, size)
        if n_order < n:
            order[n_order] = u
        n_order += 1
        if u == dst:
            break
        e_u = E[u]
        c_u = C[u]
        for k in range(offsets[u], offsets[u + 1]):
            v = heads[k]
            stats[SCANNED] += 1
            cost = _cost(k, lengths, dh, codes, coef)
            if e_u < cost:
                continue
            if e_u - cost > e_max:
                cost = e_u - e_max
            red = cost - (shift_k * dh[k] / 100.0 + potential[v] - potential[u])
            if red < 0.0:
                if red < -tol:
                    stats[CLAMPS] += 1
                    if stats[FIRST_CLAMP] < 0:
                        stats[FIRST_CLAMP] = k
                red = 0.0
            if c_u + red < C[v]:
                C[v] = c_u + red
                E[v] = e_u - cost
                pred[v] = u
                pred_edge[v] = k
                stats[RELAXED] += 1
                if pos[v] < 0:
                    heap[size] = v
                    pos[v] = size
                    size += 1
                    stats[PUSHES] += 1
                _sift_up(heap, pos, C, pos[v])
    stats[SETTLED] = n_order
    return C, E, pred, pred_edge, order[: min(n_order, n)], stats


@njit(cache=True, nogil=True)
def bellman_ford_energy_kernel(offsets, heads, lengths, dh, codes, coef, src, e_init, e_max):
    """Label-correcting maximisation of the energy level at every vertex.

    Same gate and battery cap as the Dijkstra kernel.  Returns a flag that
    is set when labels still change after ``n`` rounds or a label was
    reached through a walk of ``n`` or more edges (a gaining cycle).
    """
    n = offsets.shape[0] - 1
    E = np.full(n, -np.inf)
    pred = np.full(n, -1, np.int64)
    pred_edge = np.full(n, -1, np.int64)
    hops = np.zeros(n, np.int64)
    stats = np.zeros(N_STATS, np.int64)
    stats[FIRST_CLAMP] = -1
    E[src] = e_init
    negative_cycle = False
    changed = True
    rounds = 0
    while changed and rounds < n and not negative_cycle:
        changed = False
        rounds += 1
        for u in range(n):
            e_u = E[u]
            if e_u == -np.inf:
                continue
            for k in range(offsets[u], offsets[u + 1]):
                stats[SCANNED] += 1
                cost = _cost(k, lengths, dh, codes, coef)
                if e_u < cost:
                    continue
                if e_u - cost > e_max:
                    cost = e_u - e_max
                v = heads[k]
                if e_u - cost > E[v]:
                    E[v] = e_u - cost
                    pred[v] = u
                    pred_edge[v] = k
                    hops[v] = hops[u] + 1
                    stats[RELAXED] += 1
                    changed = True
                    if hops[v] >= n:
                        negative_cycle = True
    if changed and rounds >= n:
        negative_cycle = True
    stats[ROUNDS] = rounds
    stats[MAX_HOPS] = hops.max() if n > 0 else 0
    return E, pred, pred_edge, stats, negative_cycle


@njit(cache=True, nogil=True)
def johnson_potential_kernel(offsets, heads, lengths, dh, codes, coef):
    """Bellman-Ford from a virtual source joined to every vertex at zero cost.

    Returns ``potential`` (shortest raw cost from the virtual source), the number
    of full edge passes made and whether a negative cycle was found.
    """
    n = offsets.shape[0] - 1
    potential = np.zeros(n)
    rounds = 0
    changed = True
    # n + 1 vertices including the virtual source
    while changed and rounds <= n:
        changed = False
        rounds += 1
        for u in range(n):
            m_u = potential[u]
            for k in range(offsets[u], offsets[u + 1]):
                cand = m_u + _cost(k, lengths, dh, codes, coef)
                v = heads[k]
                if cand < potential[v]:
                    potential[v] = cand
                    changed = True
    return potential, rounds, changed
