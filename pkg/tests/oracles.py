"""Brute-force reference implementations used by several test modules.

These deliberately share no code with the package: Bellman-Ford over an
explicit edge list versus the package's heap Dijkstra, and plain-BFS signed
distances versus the package's transform-based initializer.
"""
from __future__ import annotations

import numpy as np


def bellman_ford(gcost: np.ndarray, seeds, spacing=None) -> np.ndarray:
    """Iterate edge relaxations to fixpoint on the 4/6-neighbor grid graph."""
    gcost = np.asarray(gcost, dtype=float)
    dims = gcost.shape
    nd = gcost.ndim
    if spacing is None:
        spacing = (1.0,) * nd
    edges = []
    for idx in np.ndindex(*dims):
        for axis in range(nd):
            nxt = list(idx)
            nxt[axis] += 1
            if nxt[axis] < dims[axis]:
                nxt = tuple(nxt)
                w = 0.5 * (gcost[idx] + gcost[nxt]) * spacing[axis]
                edges.append((idx, nxt, w))
    dist = {idx: np.inf for idx in np.ndindex(*dims)}
    for s in seeds:
        dist[tuple(s)] = 0.0
    changed = True
    while changed:
        changed = False
        for a, b, w in edges:
            if dist[a] + w < dist[b] - 1e-15:
                dist[b] = dist[a] + w
                changed = True
            if dist[b] + w < dist[a] - 1e-15:
                dist[a] = dist[b] + w
                changed = True
    out = np.empty(dims)
    for idx, d in dist.items():
        out[idx] = d
    return out
