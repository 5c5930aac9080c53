"""Regularized Heaviside/delta calculus and narrow-band level-set fields.

A field stores exact signed values only near its zero crossing (the band:
the front voxels plus a one-voxel ring) and clamps to ±(epsilon+1)
elsewhere; phi >= 0 means inside.  Out-of-frame cells count as exterior, so
a region touching the image border keeps a live border band.

Evolution is explicit Euler of phi' = speed * delta(phi) followed by band
maintenance: values are kept wherever a voxel stays banded, a voxel newly
exposed as front is re-seeded close to the crossing so it stays inside
delta's support (that is what lets a front retreat through previously
clamped territory), fresh ring voxels get a saturated-but-banded value, and
voxels leaving the band are clamped.  No global re-initialization ever runs.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import ndimage

from .errors import NonFiniteFieldError

DEFAULT_EPSILON = 1.5


def heaviside(phi, epsilon: float = DEFAULT_EPSILON):
    """Smoothed step: 0 below -epsilon, 1 above +epsilon, sinusoidal ramp
    in between.  Works on scalars and arrays."""
    p = np.asarray(phi, dtype=np.float64)
    # clip the ramp: sin(pi) is not exactly zero in floats, which would
    # otherwise leak values a hair outside [0, 1] at phi = +-epsilon
    mid = np.clip(
        0.5 * (1.0 + p / epsilon + np.sin(np.pi * p / epsilon) / np.pi), 0.0, 1.0
    )
    out = np.where(p > epsilon, 1.0, np.where(p < -epsilon, 0.0, mid))
    if np.isscalar(phi) or np.ndim(phi) == 0:
        return float(out)
    return out


def delta(phi, epsilon: float = DEFAULT_EPSILON):
    """Derivative of :func:`heaviside`: (1/2eps)(1+cos(pi*phi/eps)) on
    |phi| <= epsilon, zero outside."""
    p = np.asarray(phi, dtype=np.float64)
    inside = np.abs(p) <= epsilon
    out = np.where(inside, (1.0 + np.cos(np.pi * p / epsilon)) / (2.0 * epsilon), 0.0)
    if np.isscalar(phi) or np.ndim(phi) == 0:
        return float(out)
    return out


def delta_max(epsilon: float = DEFAULT_EPSILON) -> float:
    return 1.0 / epsilon


def stable_dt(max_abs_speed: float, epsilon: float = DEFAULT_EPSILON) -> float:
    """Explicit-Euler step cap 0.5 / (max|speed| * delta_max)."""
    if max_abs_speed <= 0.0:
        return np.inf
    return 0.5 * epsilon / max_abs_speed


def _front_mask(inside: np.ndarray) -> np.ndarray:
    """Voxels with a face neighbor of opposite insideness.  Out-of-frame
    cells count as exterior, so inside voxels on the image border are front."""
    nd = inside.ndim
    padded = np.pad(inside, 1, constant_values=False)
    core = tuple(slice(1, -1) for _ in range(nd))
    front = np.zeros(inside.shape, dtype=bool)
    for axis in range(nd):
        for off in (-1, 1):
            neighbor = np.roll(padded, off, axis=axis)[core]
            front |= inside != neighbor
    return front


_CROSS = {n: ndimage.generate_binary_structure(n, 1) for n in (1, 2, 3)}


def _rebuild_band(values: np.ndarray, old_front: np.ndarray, epsilon: float):
    """Recompute band membership from the current sign pattern and apply the
    maintenance rules described in the module docstring.  Mutates and
    returns (values, band)."""
    inside = values >= 0.0
    front = _front_mask(inside)
    ring = ndimage.binary_dilation(front, structure=_CROSS[values.ndim]) & ~front
    band = front | ring
    signs = np.where(inside, 1.0, -1.0)

    live_val = min(1.0, 0.75 * epsilon)  # inside delta support
    ring_val = epsilon + 0.5             # saturated for H, still banded
    clamp_val = epsilon + 1.0

    fresh_front = front & ~old_front & (np.abs(values) >= epsilon)
    values[fresh_front] = signs[fresh_front] * live_val
    fresh_ring = ring & (np.abs(values) >= clamp_val)
    values[fresh_ring] = signs[fresh_ring] * ring_val
    values[~band] = signs[~band] * clamp_val
    return values, band


@dataclass(eq=False)
class LevelSetField:
    """One label's signed narrow-band field."""

    values: np.ndarray
    label: int
    epsilon: float = DEFAULT_EPSILON
    band: np.ndarray = dc_field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.band is None:
            self.band = np.abs(self.values) < self.epsilon + 1.0

    @property
    def inside(self) -> np.ndarray:
        return self.values >= 0.0

    def snapshot_bytes(self) -> bytes:
        from .formats import rawf_bytes

        return rawf_bytes(self.values[..., np.newaxis])


def init_from_labels(labels: np.ndarray, label: int, epsilon: float = DEFAULT_EPSILON) -> LevelSetField:
    """Signed city-block distance to the region boundary, clamped to the
    band; positive inside.  Cells beyond the image frame count as exterior."""
    labels = np.asarray(labels)
    mask = labels == label
    clamp_val = epsilon + 1.0
    if not mask.any():
        values = np.full(labels.shape, -clamp_val, dtype=np.float64)
        return LevelSetField(values, label, epsilon, np.zeros(labels.shape, dtype=bool))

    core = tuple(slice(1, -1) for _ in range(labels.ndim))
    inside_dist = ndimage.distance_transform_cdt(
        np.pad(mask, 1, constant_values=False), metric="taxicab"
    )[core].astype(np.float64)
    if mask.all():
        values = inside_dist
    else:
        outside_dist = ndimage.distance_transform_cdt(~mask, metric="taxicab").astype(np.float64)
        values = np.where(mask, inside_dist, -outside_dist)
    np.clip(values, -clamp_val, clamp_val, out=values)
    values, band = _rebuild_band(values, _front_mask(mask), epsilon)
    return LevelSetField(values, label, epsilon, band)


def saturated_from_labels(
    labels: np.ndarray, label: int, epsilon: float = DEFAULT_EPSILON
) -> np.ndarray:
    """Two-valued field +/-(epsilon+1) for a region, H-saturated everywhere.

    This is the right representation for a *target* region (known reference
    or pinned estimator): the graded profile of :func:`init_from_labels`
    would leave H(target) fractional on its front layer, and a residual
    error there that the image term then amplifies.  A target is an
    indicator, not an evolving front."""
    clamp_val = epsilon + 1.0
    return np.where(np.asarray(labels) == label, clamp_val, -clamp_val)


def evolve_step(field: LevelSetField, speed: np.ndarray, dt: float) -> LevelSetField:
    """One explicit Euler step of phi' = speed * delta(phi), plus band
    maintenance.  Returns a new field; the input is left untouched."""
    speed = np.asarray(speed, dtype=np.float64)
    if not np.isfinite(speed[field.band]).all():
        raise NonFiniteFieldError(f"non-finite speed on the band of label {field.label}")
    old_front = _front_mask(field.inside)
    values = field.values.copy()
    b = field.band
    values[b] += dt * speed[b] * delta(field.values[b], field.epsilon)
    values, band = _rebuild_band(values, old_front, field.epsilon)
    return LevelSetField(values, field.label, field.epsilon, band)


def reband_after_jump(field: LevelSetField, old_front: np.ndarray | None = None) -> LevelSetField:
    """Band maintenance after a discontinuous edit of ``values`` (impulses).

    ``old_front`` should be the front mask captured before the edit; front
    voxels not in it whose value sits outside delta's support are treated as
    freshly exposed and re-seeded live.  Without it every such front voxel
    is re-seeded."""
    if old_front is None:
        old_front = np.zeros(field.values.shape, dtype=bool)
    values, band = _rebuild_band(
        field.values.astype(np.float64, copy=True), old_front, field.epsilon
    )
    return LevelSetField(values, field.label, field.epsilon, band)
