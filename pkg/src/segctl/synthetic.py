"""Deterministic synthetic user and image generators for headless runs.

The synthetic user closes the loop without a human: it looks at the current
label map, finds the largest connected region of voxels whose reference
label has not been reached, and paints a brush-ball stroke at that
component's most interior voxel.  Every choice ties back to array order, so
identical sessions evolve identically.

Generators produce small labelled scenes (piecewise-constant regions, disks,
overlapping textures, thin bars) with optional clipped Gaussian noise; each
returns the image, the reference label map, and the label count.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid import ImageVolume, dice
from .inputs import Stroke
from .session import Session


@dataclass(frozen=True)
class SyntheticCase:
    name: str
    img: ImageVolume
    reference: np.ndarray  # int64 labels, background = n_labels
    n_labels: int


# ----------------------------------------------------------------- geometry


def most_interior(mask: np.ndarray) -> tuple:
    """Voxel of maximal taxicab erosion depth; ties break to the smallest
    linear index (C order)."""
    if not mask.any():
        raise ValueError("empty mask has no interior")
    padded = np.pad(mask, 1, constant_values=False)
    depth = ndimage.distance_transform_cdt(padded, metric="taxicab")
    core = depth[tuple(slice(1, -1) for _ in mask.shape)]
    flat = np.where(mask, core, -1)
    return tuple(int(c) for c in np.unravel_index(int(np.argmax(flat)), mask.shape))


def brush_ball(center: tuple, radius: int, dims: tuple) -> list:
    """Euclidean ball of voxels around ``center`` clipped to the image."""
    nd = len(dims)
    out = []
    for off in np.ndindex(*(2 * radius + 1,) * nd):
        delta = tuple(o - radius for o in off)
        if sum(d * d for d in delta) > radius * radius:
            continue
        vox = tuple(center[a] + delta[a] for a in range(nd))
        if all(0 <= vox[a] < dims[a] for a in range(nd)):
            out.append(vox)
    return out


def largest_unreached_component(
    labels: np.ndarray, reference: np.ndarray, n_labels: int
):
    """(label, component mask) of the biggest connected unreached region,
    or None when the maps agree.  Ordering: size desc, then smallest linear
    index of the component's first voxel."""
    best = None  # (-size, anchor, label, mask)
    for i in range(1, n_labels + 1):
        unreached = (reference == i) & (labels != i)
        if not unreached.any():
            continue
        comp, ncomp = ndimage.label(unreached)
        flat = comp.ravel()
        sizes = np.bincount(flat, minlength=ncomp + 1)
        ids, first = np.unique(flat, return_index=True)
        anchors = dict(zip(ids.tolist(), first.tolist()))
        for c in range(1, ncomp + 1):
            key = (-int(sizes[c]), anchors[c], i)
            if best is None or key < best[:3]:
                best = (key[0], key[1], i, comp == c)
    if best is None:
        return None
    return best[2], best[3]


# ------------------------------------------------------------ the user loop


def synthetic_user_step(
    session: Session, reference: np.ndarray | None = None, brush_radius: int = 3
):
    """One review: return the corrective Stroke, or None when the session is
    good enough (largest error component under 0.5% of the image, or Dice at
    least 0.95 on every foreground label)."""
    if reference is None:
        reference = session.reference
    if reference is None:
        raise ValueError("synthetic user needs a reference label map")
    labels = session.state.labels
    if reference.shape != labels.shape:
        raise ValueError("reference dims do not match the session")
    n = session.cfg.n_labels
    found = largest_unreached_component(labels, reference, n)
    if found is None:
        return None
    fg = range(1, n) if n > 1 else [1]
    if min(dice(labels, reference, i) for i in fg) >= 0.95:
        return None
    label, mask = found
    if int(mask.sum()) < 0.005 * labels.size:
        return None
    center = most_interior(mask)
    ball = [v for v in brush_ball(center, brush_radius, labels.shape)
            if reference[v] == label]
    return Stroke(label, tuple(ball))


def settle_session(session: Session, quiet: int = 10, max_ticks: int = 250) -> int:
    """Tick until the label map stops changing (``quiet`` consecutive zero-
    reclassification ticks) or the cap; returns ticks spent."""
    run = 0
    for n in range(1, max_ticks + 1):
        if session.tick().reclassified == 0:
            run += 1
            if run >= quiet:
                return n
        else:
            run = 0
    return max_ticks


def drive_session(
    session: Session,
    brush_radius: int = 3,
    max_impulses: int = 50,
    settle_ticks: int | None = None,
    quiet: int = 10,
    settle_cap: int = 250,
) -> dict:
    """Closed loop: let the automatic dynamics settle, then review/stroke at
    the configured cadence until the user is satisfied at a settled state or
    the impulse budget runs out.  Returns a small report dict."""
    cadence = session.cfg.review_interval if settle_ticks is None else settle_ticks
    settle_session(session, quiet, settle_cap)
    impulses = 0
    satisfied = False
    while impulses < max_impulses:
        stroke = synthetic_user_step(session, brush_radius=brush_radius)
        if stroke is None:
            # looks done mid-flight: confirm against a settled state
            settle_session(session, quiet, settle_cap)
            if synthetic_user_step(session, brush_radius=brush_radius) is None:
                satisfied = True
                break
            continue
        session.ingest_stroke(stroke)
        impulses += 1
        for _ in range(cadence):
            session.tick()
    if not satisfied:
        satisfied = synthetic_user_step(session, brush_radius=brush_radius) is None
    return {
        "impulses": impulses,
        "satisfied": satisfied,
        "min_dice": session.min_foreground_dice(),
        "actuated": session.actuated,
        "ticks": len(session.metrics.rows) - 1,
    }


def interior_seeds(reference: np.ndarray, n_labels: int) -> dict:
    """One most-interior seed voxel per label: the canonical minimal init
    for distance mode."""
    return {
        i: [most_interior(reference == i)] for i in range(1, n_labels + 1)
    }


def degrade_labels(reference: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """A wrong-but-covering init: the reference rolled by one or two voxels
    per axis, so every label survives, each keeps majority overlap with its
    true region (the intensity statistics stay informative), and the
    synthetic user still has work to do along every boundary."""
    shift = tuple(int(rng.integers(1, 3)) * (1 if rng.random() < 0.5 else -1)
                  for _ in reference.shape)
    return np.roll(reference, shift, axis=tuple(range(reference.ndim)))


# ----------------------------------------------------------------- imagery


def _noisy(base: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    if sigma <= 0:
        return base.astype(float)
    return np.clip(base + rng.normal(0.0, sigma, base.shape), 0.0, 255.0)


def two_region_case(
    shape=(32, 32), sigma: float = 0.0, seed: int = 0, levels=(190.0, 60.0),
    variant: str = ""
) -> SyntheticCase:
    """Vertical split: left half label 1 at levels[0], right half background
    (label 2) at levels[1]."""
    rng = np.random.default_rng(seed)
    ref = np.full(shape, 2, dtype=np.int64)
    ref[:, : shape[1] // 2] = 1
    base = np.where(ref == 1, levels[0], levels[1])
    img = ImageVolume(_noisy(base, sigma, rng))
    return SyntheticCase(f"two-region-s{int(sigma)}{variant}", img, ref, 2)


def _disk(shape, center, radius) -> np.ndarray:
    grids = np.ogrid[tuple(slice(0, n) for n in shape)]
    d2 = sum((g - c) ** 2 for g, c in zip(grids, center))
    return d2 <= radius * radius


def two_disks_case(size: int = 40, sigma: float = 0.0, seed: int = 0) -> SyntheticCase:
    """Two disks on a dark background: label 1 bright, label 2 mid,
    background label 3.  Disk area stays well above the synthetic user's
    0.5%-of-image stop size so per-label Dice is the binding stop rule."""
    rng = np.random.default_rng(seed)
    shape = (size, size)
    ref = np.full(shape, 3, dtype=np.int64)
    ref[_disk(shape, (size // 3, size // 3), size // 5)] = 1
    ref[_disk(shape, (2 * size // 3, 2 * size // 3), size // 5)] = 2
    base = np.choose(ref - 1, [220.0, 120.0, 20.0])
    img = ImageVolume(_noisy(base, sigma, rng))
    return SyntheticCase(f"two-disks-s{int(sigma)}", img, ref, 3)


def overlapping_textures_case(shape=(40, 40), seed: int = 0,
                               variant: str = "") -> SyntheticCase:
    """Two regions whose intensity histograms overlap (means 40 apart,
    noise sigma 25)."""
    rng = np.random.default_rng(seed)
    ref = np.full(shape, 2, dtype=np.int64)
    ref[: shape[0] // 2, :] = 1
    base = np.where(ref == 1, 140.0, 100.0)
    img = ImageVolume(_noisy(base, 25.0, rng))
    return SyntheticCase(f"overlap-textures{variant}", img, ref, 2)


def thin_structures_case(
    shape=(32, 32), sigma: float = 0.0, seed: int = 0, bar_width: int = 4
) -> SyntheticCase:
    """Three thin horizontal bars (label 1) on a dark background."""
    rng = np.random.default_rng(seed)
    ref = np.full(shape, 2, dtype=np.int64)
    for row in (4, 14, 24):
        ref[row : row + bar_width, :] = 1
    base = np.where(ref == 1, 200.0, 25.0)
    img = ImageVolume(_noisy(base, sigma, rng))
    return SyntheticCase(f"thin-bars-s{int(sigma)}", img, ref, 2)


def acceptance_suite(seed: int = 0) -> list:
    """Eight two-label scenes from the closed-loop success classes:
    piecewise-constant two-region at sigma 0/10/25, overlapping-intensity
    textures, and thin structures."""
    return [
        two_region_case(sigma=0.0, seed=seed + 1),
        two_region_case(sigma=10.0, seed=seed + 2),
        two_region_case(sigma=25.0, seed=seed + 3),
        two_region_case(shape=(28, 36), sigma=25.0, seed=seed + 4,
                        levels=(205.0, 75.0), variant="-b"),
        overlapping_textures_case(seed=seed + 5),
        overlapping_textures_case(seed=seed + 9, variant="-b"),
        thin_structures_case(sigma=0.0, seed=seed + 6),
        thin_structures_case(sigma=10.0, seed=seed + 7),
    ]


def benchmark_suite(seed: int = 0) -> list:
    """The stock scenes for cli_bench: the acceptance classes plus
    three-label disk scenes (reported, not thresholded)."""
    return [
        two_region_case(sigma=0.0, seed=seed + 1),
        two_region_case(sigma=10.0, seed=seed + 2),
        two_region_case(sigma=25.0, seed=seed + 3),
        two_disks_case(sigma=0.0, seed=seed + 4),
        two_disks_case(sigma=10.0, seed=seed + 5),
        overlapping_textures_case(seed=seed + 6),
        thin_structures_case(sigma=0.0, seed=seed + 7),
        thin_structures_case(sigma=10.0, seed=seed + 8),
    ]


def random_case(rng: np.random.Generator, *, max_size: int = 32,
                noise_sigma: float = 0.0) -> SyntheticCase:
    """Random piecewise-constant scene: one or two shapes on a background,
    intensity levels at least 60 apart."""
    size = int(rng.integers(16, max_size + 1))
    shape = (size, size)
    n_fg = int(rng.integers(1, 3))
    n_labels = n_fg + 1
    ref = np.full(shape, n_labels, dtype=np.int64)
    for i in range(1, n_fg + 1):
        kind = rng.random()
        c = (int(rng.integers(size // 4, 3 * size // 4)),
             int(rng.integers(size // 4, 3 * size // 4)))
        r = int(rng.integers(max(3, size // 8), max(4, size // 4)))
        if kind < 0.5:
            ref[_disk(shape, c, r)] = i
        else:
            r0, r1 = max(0, c[0] - r), min(size, c[0] + r)
            c0, c1 = max(0, c[1] - r), min(size, c[1] + r)
            ref[r0:r1, c0:c1] = i
    # every label must survive the overlaps; redraw empties as small squares
    for i in range(1, n_labels):
        if not (ref == i).any():
            a = int(rng.integers(1, size - 5))
            b = int(rng.integers(1, size - 5))
            ref[a : a + 4, b : b + 4] = i
    levels = list(rng.permutation(np.arange(n_labels) * 80.0 + 30.0))
    base = np.zeros(shape)
    for i in range(1, n_labels + 1):
        base[ref == i] = levels[i - 1]
    noise = rng.normal(0.0, noise_sigma, shape) if noise_sigma > 0 else 0.0
    img = ImageVolume(np.clip(base + np.clip(noise, -25.0, 25.0), 0.0, 255.0))
    return SyntheticCase(f"random-{size}", img, ref, n_labels)
