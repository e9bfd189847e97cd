"""Compiled inner loops of the chain solver.

All kernels take plain float64/int64 arrays so they can be called from worker
threads with the GIL released.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def envelope_into(costs, levels, weight, out, arg):
    """out[k] = min_j costs[j] + weight (levels[k] - levels[j])², argmin in ``arg``.

    Lower envelope of parabolas; infinite costs are skipped. Among equal values
    the lowest j wins.
    """
    m = costs.shape[0]
    hull = np.empty(m, dtype=np.int64)
    bounds = np.empty(m + 1, dtype=np.float64)
    size = 0
    for q in range(m):
        cq = costs[q]
        if not np.isfinite(cq):
            continue
        if size == 0:
            hull[0] = q
            bounds[0] = -np.inf
            bounds[1] = np.inf
            size = 1
            continue
        yq = levels[q]
        lifted_q = cq + weight * yq * yq
        # bounds[0] is -inf, so the loop stops before the hull empties
        while True:
            p = hull[size - 1]
            yp = levels[p]
            crossing = (lifted_q - (costs[p] + weight * yp * yp)) / (2.0 * weight * (yq - yp))
            if crossing > bounds[size - 1]:
                break
            size -= 1
        hull[size] = q
        bounds[size] = crossing
        bounds[size + 1] = np.inf
        size += 1

    if size == 0:
        for k in range(m):
            out[k] = np.inf
            arg[k] = -1
        return

    cursor = 0
    for k in range(m):
        y = levels[k]
        while cursor + 1 < size and bounds[cursor + 1] < y:
            cursor += 1
        j = hull[cursor]
        best = costs[j] + weight * (y - levels[j]) ** 2
        # settle rounding in the crossing points by direct comparison
        while cursor + 1 < size:
            nxt = hull[cursor + 1]
            value = costs[nxt] + weight * (y - levels[nxt]) ** 2
            if value < best:
                cursor += 1
                best = value
                j = nxt
            else:
                break
        while cursor > 0:
            prv = hull[cursor - 1]
            value = costs[prv] + weight * (y - levels[prv]) ** 2
            if value <= best:
                cursor -= 1
                best = value
                j = prv
            else:
                break
        out[k] = best
        arg[k] = j


@njit(cache=True, nogil=True)
def chain_pass(table, levels, weight, start, wrap, path):
    """Open-chain Viterbi pass over the nodes of ``table`` (n_t × m).

    ``start >= 0`` pins node 0 to that level; ``wrap`` adds the closing
    transition back to node 0. Returns the chain value and fills ``path``.
    """
    n, m = table.shape
    current = np.empty(m, dtype=np.float64)
    relaxed = np.empty(m, dtype=np.float64)
    back = np.empty((n, m), dtype=np.int64)
    if start >= 0:
        for k in range(m):
            current[k] = np.inf
        current[start] = table[0, start]
    else:
        for k in range(m):
            current[k] = table[0, k]
    for k in range(m):
        back[0, k] = -1

    for i in range(1, n):
        envelope_into(current, levels, weight, relaxed, back[i])
        for k in range(m):
            current[k] = relaxed[k] + table[i, k]

    best = np.inf
    best_k = -1
    for k in range(m):
        value = current[k]
        if wrap and start >= 0:
            value += weight * (levels[start] - levels[k]) ** 2
        if value < best:
            best = value
            best_k = k

    path[n - 1] = best_k
    for i in range(n - 1, 0, -1):
        path[i - 1] = back[i, path[i]]
    return best


@njit(cache=True, nogil=True)
def cyclic_restarts(table, levels, weight, starts, values, paths):
    """One pinned chain pass per entry of ``starts``, closing the cycle."""
    for r in range(starts.shape[0]):
        values[r] = chain_pass(table, levels, weight, starts[r], True, paths[r])


@njit(cache=True, nogil=True)
def refine_sweep(breakpoints, slopes, edges, weight, heights):
    """One cyclic coordinate-descent sweep over continuous node heights.

    Node i minimises g_i(y) + weight ((y - y_{i-1})² + (y_{i+1} - y)²) exactly
    over every radial cell. Returns the number of nodes that moved.
    """
    n = heights.shape[0]
    n_x = slopes.shape[1]
    moved = 0
    for i in range(n):
        left = heights[(i - 1) % n]
        right = heights[(i + 1) % n]
        centre = 0.5 * (left + right)

        y = heights[i]
        cell = np.searchsorted(edges, y, side="right") - 1
        if cell > n_x - 1:
            cell = n_x - 1
        if cell < 0:
            cell = 0
        if y >= edges[n_x]:
            data_now = breakpoints[i, n_x]
        else:
            data_now = breakpoints[i, cell] + slopes[i, cell] * (y - edges[cell])
        current = data_now + weight * ((y - left) ** 2 + (right - y) ** 2)

        best = current
        best_y = y
        for j in range(n_x):
            lo = edges[j]
            hi = edges[j + 1]
            candidate = centre - slopes[i, j] / (4.0 * weight)
            if candidate < lo:
                candidate = lo
            elif candidate > hi:
                candidate = hi
            value = (
                breakpoints[i, j]
                + slopes[i, j] * (candidate - lo)
                + weight * ((candidate - left) ** 2 + (right - candidate) ** 2)
            )
            if value < best:
                best = value
                best_y = candidate
        if best < current - 1e-15 * max(1.0, abs(current)):
            heights[i] = best_y
            moved += 1
    return moved
