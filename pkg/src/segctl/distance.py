"""Seeded geodesic distances on the grid graph and shortest-distance
clustering: the distance-based flavor of the intrinsic dynamics.

The graph is the 4-neighbor (2-D) / 6-neighbor (3-D) lattice; the edge
between voxels a and b costs (gcost(a)+gcost(b))/2 * spacing along that
axis.  Distances come from a plain binary-heap Dijkstra with deterministic
tie order (distance, then linear voxel index in C order).
"""
from __future__ import annotations

import heapq

import numpy as np

from .errors import EmptySeedError, StrokeBoundsError, UnreachedVoxelError


def seed_distance(
    gcost: np.ndarray,
    seeds,
    spacing: tuple[float, ...] | None = None,
) -> np.ndarray:
    """Geodesic distance from a set of seed voxels; +inf where unreached.

    ``seeds`` is an iterable of per-axis integer index tuples.  ``gcost``
    must be >= 1 everywhere (edge-cost field); infinite entries act as
    impassable walls.
    """
    gcost = np.asarray(gcost, dtype=np.float64)
    dims = gcost.shape
    if spacing is None:
        spacing = (1.0,) * gcost.ndim
    seed_list = [tuple(int(c) for c in s) for s in seeds]
    if not seed_list:
        raise EmptySeedError("seed set is empty")
    for s in seed_list:
        if len(s) != gcost.ndim or any(not (0 <= c < dims[a]) for a, c in enumerate(s)):
            raise StrokeBoundsError(f"seed {s} outside grid {dims}")

    flat_g = gcost.ravel()
    n = flat_g.size
    strides = [int(np.prod(dims[a + 1 :], dtype=np.int64)) for a in range(gcost.ndim)]
    # (stride, axis extent, step cost scale) per move direction
    dist = np.full(n, np.inf)
    heap: list[tuple[float, int]] = []
    for s in seed_list:
        lin = int(np.ravel_multi_index(s, dims))
        if dist[lin] > 0.0:
            dist[lin] = 0.0
            heapq.heappush(heap, (0.0, lin))

    extents = dims
    nd = gcost.ndim
    while heap:
        d, idx = heapq.heappop(heap)
        if d > dist[idx]:
            continue
        rem = idx
        coord = []
        for a in range(nd):
            coord.append(rem // strides[a])
            rem %= strides[a]
        gc_here = flat_g[idx]
        for a in range(nd):
            for off in (-1, 1):
                c = coord[a] + off
                if not (0 <= c < extents[a]):
                    continue
                nidx = idx + off * strides[a]
                step = 0.5 * (gc_here + flat_g[nidx]) * spacing[a]
                nd_ = d + step
                if nd_ < dist[nidx]:
                    dist[nidx] = nd_
                    heapq.heappush(heap, (nd_, nidx))
    return dist.reshape(dims)


def assign_labels(dists: dict[int, np.ndarray]) -> np.ndarray:
    """Per-voxel argmin over the labels' distance fields; ties go to the
    smallest label."""
    labels = sorted(dists)
    stack = np.stack([dists[l] for l in labels])
    if np.isinf(stack).all(axis=0).any():
        raise UnreachedVoxelError("some voxel is unreached by every label")
    idx = np.argmin(stack, axis=0)  # first occurrence wins -> smallest label
    return np.asarray(labels, dtype=np.int64)[idx]


def natural_speed(label: int, dists: dict[int, np.ndarray], gcost: np.ndarray) -> np.ndarray:
    """Distance-mode intrinsic speed for one label.

    +gcost where the label is the unique argmin of the distance fields,
    -gcost where some competitor beats it, 0 on exact ties; derived from the
    own-cost / best-competitor-cost decomposition.
    """
    own = dists[label]
    others = [d for l, d in dists.items() if l != label]
    comp = np.minimum.reduce(others)
    dmin = np.minimum(own, comp)
    g_own = np.where(own > dmin, gcost, 0.0)
    g_comp = np.where(comp > dmin, gcost, 0.0)
    return g_comp - g_own
