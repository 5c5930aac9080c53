"""Stroke modeling: geodesic stroke kernels, gated diffusion of the support
fields, distance-based inputs, and per-label aggregation into the signed
support U_i.

Region flavor: each stroke deposits a kernel that is 1 on the stroke and
decays linearly in geodesic distance, reaching 0 at d_max; the accumulated
per-label field then diffuses a few explicit steps per engine tick through a
gate that opens where the field is large relative to the image bound, and a
growth term that reinforces existing support.  Values are clamped to
[0, u_cap] because the growth term alone is unstable by design.

Distance flavor: each label keeps the pointwise minimum geodesic distance to
any of its strokes; support is the margin between the competitors' best
distance and one's own.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distance import seed_distance
from .errors import EmptySeedError, NonFiniteFieldError, StrokeBoundsError
from .levelset import DEFAULT_EPSILON, heaviside

U_CAP = 4.0


@dataclass(frozen=True)
class Stroke:
    """One user gesture: an ordered voxel set for one label."""

    label: int
    voxels: tuple[tuple[int, ...], ...]
    t: float = 0.0
    seq: int = 0

    def __post_init__(self) -> None:
        if not self.voxels:
            raise EmptySeedError("stroke has no voxels")
        object.__setattr__(
            self, "voxels", tuple(tuple(int(c) for c in v) for v in self.voxels)
        )

    def check_bounds(self, dims: tuple[int, ...]) -> None:
        for v in self.voxels:
            if len(v) != len(dims) or any(not (0 <= c < dims[a]) for a, c in enumerate(v)):
                raise StrokeBoundsError(f"stroke voxel {v} outside grid {dims}")


def stroke_kernel(
    stroke: Stroke,
    gcost: np.ndarray,
    d_max: float,
    spacing: tuple[float, ...] | None = None,
) -> np.ndarray:
    """Kernelized stroke support: 1 on the stroke, linear decay to 0 at
    geodesic distance d_max."""
    if d_max <= 0:
        raise ValueError(f"d_max must be positive, got {d_max}")
    d = seed_distance(gcost, stroke.voxels, spacing)
    return np.clip((d_max - d) / d_max, 0.0, 1.0)


def _laplacian(u: np.ndarray, spacing: tuple[float, ...]) -> np.ndarray:
    """5-point (2-D) / 7-point (3-D) Laplacian with zero-flux borders."""
    lap = np.zeros_like(u)
    for axis, h in enumerate(spacing):
        if u.shape[axis] < 2:
            continue
        pad = [(1, 1) if a == axis else (0, 0) for a in range(u.ndim)]
        p = np.pad(u, pad, mode="edge")
        lo = tuple(slice(0, -2) if a == axis else slice(None) for a in range(u.ndim))
        hi = tuple(slice(2, None) if a == axis else slice(None) for a in range(u.ndim))
        lap += (p[hi] - 2.0 * u + p[lo]) / (h * h)
    return lap


def diffuse(
    u: np.ndarray,
    g_m: np.ndarray,
    steps: int,
    dt: float,
    epsilon: float = DEFAULT_EPSILON,
    spacing: tuple[float, ...] | None = None,
    u_cap: float = U_CAP,
) -> np.ndarray:
    """Explicit steps of u' = u + div(gate * grad u), center-gated.

    The gate is the smoothed step of (u/g_m)^2 - 1, evaluated at the voxel
    whose flux it scales; where g_m is zero (featureless image) the gate is
    fully open so support spreads freely.  Values are clamped to [0, u_cap].
    """
    u = np.asarray(u, dtype=np.float64)
    if not np.isfinite(u).all():
        raise NonFiniteFieldError("non-finite input support field")
    if spacing is None:
        spacing = (1.0,) * u.ndim
    flat = g_m == 0.0
    safe_gm = np.where(flat, 1.0, g_m)
    for _ in range(steps):
        ratio = u / safe_gm
        gate = heaviside(ratio * ratio - 1.0, epsilon)
        gate = np.where(flat, 1.0, gate)
        u = u + dt * (u + gate * _laplacian(u, spacing))
        np.clip(u, 0.0, u_cap, out=u)
    return u


def diffusion_dt(spacing: tuple[float, ...]) -> float:
    """Stability cap for the explicit diffusion step (diffusivity <= 1)."""
    h = min(spacing)
    return h * h / (2.0 * len(spacing))


def accumulate_region(u_fields: dict[int, np.ndarray], label: int) -> np.ndarray:
    """Signed support U_i = u_i - sum of the other labels' fields."""
    total = np.zeros_like(u_fields[label])
    for l, u in u_fields.items():
        if l != label:
            total += u
    return u_fields[label] - total


def accumulate_distance(min_dists: dict[int, np.ndarray], label: int) -> np.ndarray:
    """Signed support U_i = -(own best stroke distance) + (competitors'
    best stroke distance); positive where label i's strokes are closest."""
    own = min_dists[label]
    others = [d for l, d in min_dists.items() if l != label]
    comp = np.minimum.reduce(others)
    return comp - own
