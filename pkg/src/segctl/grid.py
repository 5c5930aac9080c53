"""Regular-grid containers plus the image-derived quantities everything else
consumes: the edge-cost field g = 1 + |grad I|^2 and the Dice overlap metric.

Axis convention: arrays are indexed in C order, and every coordinate list in
the package (strokes, seeds, wire messages) names axes in that same order,
first axis first.  Label maps carry one integer in {1..N} per voxel; label N
is the background.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError


@dataclass(frozen=True, eq=False)
class ImageVolume:
    """A 2-D or 3-D multi-channel image on a regular grid.

    ``values`` is stored with shape ``dims + (channels,)``.  Rank-2 input is
    a scalar 2-D image; rank-4 is a 3-D multi-channel volume; rank-3 input is
    read as 2-D multi-channel unless a length-3 ``spacing`` marks it as a
    scalar 3-D volume.  ``spacing`` is the per-axis physical step in grid
    units, 1.0 per axis by default.  Instances are immutable: the value
    buffer is marked read-only at construction.
    """

    values: np.ndarray
    spacing: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim == 2 or (arr.ndim == 3 and len(self.spacing) == 3):
            arr = arr[..., np.newaxis]  # scalar image without a channel axis
        if arr.ndim not in (3, 4):
            raise DimensionMismatchError(
                f"expected 2-D or 3-D image data, got array of rank {arr.ndim}"
            )
        if any(n < 1 for n in arr.shape):
            raise DimensionMismatchError(f"degenerate extent in shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("image intensities must be finite")
        spacing = self.spacing or (1.0,) * (arr.ndim - 1)
        spacing = tuple(float(s) for s in spacing)
        if len(spacing) != arr.ndim - 1 or any(s <= 0 for s in spacing):
            raise DimensionMismatchError(
                f"spacing {spacing} does not fit image of rank {arr.ndim - 1}"
            )
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "spacing", spacing)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.values.shape[:-1]

    @property
    def channels(self) -> int:
        return self.values.shape[-1]

    @property
    def ndim_spatial(self) -> int:
        return self.values.ndim - 1

    @property
    def diagonal(self) -> float:
        """Physical length of the image diagonal (used for brush ranges)."""
        return float(
            np.sqrt(sum((n * s) ** 2 for n, s in zip(self.dims, self.spacing)))
        )


def gradient_magnitude_sq(img: ImageVolume) -> np.ndarray:
    """Edge cost g(x) = 1 + sum over axes and channels of (dI/daxis)^2.

    Central differences in the interior, one-sided at the boundaries; axes of
    extent 1 contribute nothing.  The result is >= 1 everywhere, so it is
    directly usable as a shortest-path edge cost.
    """
    out = np.ones(img.dims, dtype=np.float64)
    for c in range(img.channels):
        chan = img.values[..., c]
        for axis in range(img.ndim_spatial):
            if img.dims[axis] < 2:
                continue
            d = np.gradient(chan, img.spacing[axis], axis=axis, edge_order=1)
            out += d * d
    return out


def dice(a: np.ndarray, b: np.ndarray, label: int) -> float:
    """Dice overlap 2|A∩B| / (|A|+|B|) of one label between two label maps.

    Returns 1.0 when the label is absent from both maps (both agree the
    structure is missing).
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"label maps differ in shape: {a.shape} vs {b.shape}")
    ma = a == label
    mb = b == label
    total = int(ma.sum()) + int(mb.sum())
    if total == 0:
        return 1.0
    return 2.0 * int((ma & mb).sum()) / total
