"""Region-competition intrinsic dynamics: first-order region statistics and
the own-cost minus best-competitor-cost speed decomposition, plus the
analytic image bound used to size the feedback gain.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError
from .grid import ImageVolume
from .levelset import DEFAULT_EPSILON, delta, delta_max


@dataclass(frozen=True, eq=False)
class RegionStats:
    """Per-label intensity sums, voxel counts, and means (channels kept).

    Labels run 1..N and map to row ``label - 1``.  An empty label's mean
    falls back to the global image mean so its cost stays defined.
    """

    sums: np.ndarray
    counts: np.ndarray
    means: np.ndarray


def update_stats(img: ImageVolume, labels: np.ndarray, n_labels: int) -> RegionStats:
    labels = np.asarray(labels)
    if labels.shape != img.dims:
        raise DimensionMismatchError(
            f"label map {labels.shape} does not match image {img.dims}"
        )
    flat = labels.ravel() - 1
    counts = np.bincount(flat, minlength=n_labels).astype(np.int64)
    sums = np.empty((n_labels, img.channels), dtype=np.float64)
    for c in range(img.channels):
        sums[:, c] = np.bincount(flat, weights=img.values[..., c].ravel(), minlength=n_labels)
    global_mean = img.values.reshape(-1, img.channels).mean(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = sums / counts[:, None]
    means[counts == 0] = global_mean
    return RegionStats(sums=sums, counts=counts, means=means)


def g_region(
    img: ImageVolume,
    mean: np.ndarray,
    phi: np.ndarray,
    epsilon: float = DEFAULT_EPSILON,
) -> np.ndarray:
    """Own-region cost (I - mu_i)^2 * delta(phi_i); channels summed."""
    resid = img.values - np.asarray(mean).reshape((1,) * (img.values.ndim - 1) + (-1,))
    return (resid * resid).sum(axis=-1) * delta(phi, epsilon)


def g_competitor(g_all: dict[int, np.ndarray], label: int) -> np.ndarray:
    """Pointwise best (minimum) competitor cost among the other labels."""
    others = [g for l, g in g_all.items() if l != label]
    return np.minimum.reduce(others)


def compose_G(g_own: np.ndarray, g_comp: np.ndarray) -> np.ndarray:
    """Intrinsic speed: shrink where the own cost exceeds the best
    competitor, grow where a competitor is costlier."""
    return g_comp - g_own


def g_M_bound(img: ImageVolume, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """Pointwise upper bound on |G| for the region dynamics.

    Region means can never leave [I_min, I_max] (per channel), so
    (I - mu)^2 <= max((I-I_min)^2, (I-I_max)^2); delta contributes at most
    1/epsilon.  Channel bounds are summed, mirroring the summed residuals.
    """
    out = np.zeros(img.dims, dtype=np.float64)
    for c in range(img.channels):
        chan = img.values[..., c]
        lo = chan - chan.min()
        hi = chan - chan.max()
        out += np.maximum(lo * lo, hi * hi)
    return out * delta_max(epsilon)
