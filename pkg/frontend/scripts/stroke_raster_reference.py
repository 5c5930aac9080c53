"""Reference stroke rasterization and shared-fixture generator.

The UI rasterizes a pointer path into the voxel set the engine's brush
would paint: consecutive pointer samples are joined with Bresenham lines,
every line point stamps the engine's Euclidean brush ball, and the union
is emitted deduplicated in row-major order.  This module is the Python
side of that contract — the disk stamping is the engine's own
``brush_ball`` — and doubles as the generator for the fixture vectors the
TypeScript implementation is tested against.

Run from the repository root:

    python3 frontend/scripts/stroke_raster_reference.py
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

HERE = Path(__file__).resolve()
REPO = HERE.parents[2]
sys.path.insert(0, str(REPO / "src"))

from segctl.server import encode_message  # noqa: E402
from segctl.synthetic import brush_ball  # noqa: E402


def bresenham(a: tuple[int, int], b: tuple[int, int]) -> list[tuple[int, int]]:
    """Integer grid points of the line from a to b, inclusive."""
    (r0, c0), (r1, c1) = a, b
    dr = abs(r1 - r0)
    dc = -abs(c1 - c0)
    sr = 1 if r0 < r1 else -1
    sc = 1 if c0 < c1 else -1
    err = dr + dc
    r, c = r0, c0
    points = []
    while True:
        points.append((r, c))
        if (r, c) == (r1, c1):
            break
        e2 = 2 * err
        if e2 >= dc:
            err += dc
            r += sr
        if e2 <= dr:
            err += dr
            c += sc
    return points


def stroke_voxels(
    path: list[tuple[int, int]], radius: int, dims: tuple[int, int]
) -> list[tuple[int, int]]:
    """Swept-brush voxel set: union of engine brush balls along the
    Bresenham-interpolated path, clipped to dims, sorted row-major."""
    if not path:
        return []
    centers: set[tuple[int, int]] = set()
    if len(path) == 1:
        centers.add(tuple(path[0]))
    else:
        for a, b in zip(path, path[1:]):
            centers.update(bresenham(tuple(a), tuple(b)))
    voxels: set[tuple[int, int]] = set()
    for center in centers:
        voxels.update(brush_ball(center, radius, dims))
    return sorted(voxels)


# ------------------------------------------------------------- generation


def _handmade_cases() -> list[dict]:
    cases = [
        {"name": "click-r0", "dims": (16, 16), "radius": 0, "path": [(8, 8)]},
        {"name": "click-r1", "dims": (16, 16), "radius": 1, "path": [(8, 8)]},
        {"name": "click-r2", "dims": (16, 16), "radius": 2, "path": [(8, 8)]},
        {"name": "click-r3", "dims": (11, 13), "radius": 3, "path": [(5, 6)]},
        {"name": "click-r4", "dims": (20, 20), "radius": 4, "path": [(9, 9)]},
        {"name": "click-r5", "dims": (24, 18), "radius": 5, "path": [(11, 8)]},
        {"name": "corner-clip", "dims": (16, 16), "radius": 2, "path": [(0, 0)]},
        {"name": "outside-clip", "dims": (16, 16), "radius": 2, "path": [(-1, 15)]},
        {"name": "drag-horizontal", "dims": (16, 32), "radius": 1,
         "path": [(8, 4), (8, 20)]},
        {"name": "drag-vertical", "dims": (32, 16), "radius": 2,
         "path": [(4, 8), (20, 8)]},
        {"name": "drag-diagonal", "dims": (24, 24), "radius": 2,
         "path": [(3, 3), (18, 18)]},
        {"name": "drag-antidiagonal", "dims": (24, 24), "radius": 3,
         "path": [(20, 3), (5, 18)]},
        {"name": "jump-interpolated", "dims": (32, 32), "radius": 2,
         "path": [(4, 4), (27, 9)]},
        {"name": "knight-steps", "dims": (16, 16), "radius": 1,
         "path": [(2, 2), (4, 3), (6, 4), (8, 5)]},
        {"name": "drag-ten-pixels", "dims": (16, 32), "radius": 2,
         "path": [(8, 6), (8, 15)]},
        {"name": "revisit-dedupe", "dims": (16, 16), "radius": 1,
         "path": [(8, 4), (8, 10), (8, 4)]},
        {"name": "zigzag", "dims": (20, 20), "radius": 1,
         "path": [(3, 3), (6, 9), (3, 15), (9, 15), (6, 9)]},
        {"name": "fully-outside", "dims": (8, 8), "radius": 1,
         "path": [(-5, -5), (-3, -6)]},
        {"name": "border-sweep", "dims": (12, 12), "radius": 3,
         "path": [(0, 0), (0, 11), (11, 11)]},
        {"name": "tiny-grid", "dims": (3, 4), "radius": 2, "path": [(1, 1), (1, 3)]},
    ]
    return cases


def _random_cases(count: int) -> list[dict]:
    import numpy as np

    rng = np.random.default_rng(7)
    cases = []
    for i in range(count):
        dims = (int(rng.integers(5, 41)), int(rng.integers(5, 41)))
        radius = int(rng.integers(0, 6))
        n_pts = int(rng.integers(1, 13))
        path = [
            (
                int(rng.integers(-4, dims[0] + 4)),
                int(rng.integers(-4, dims[1] + 4)),
            )
            for _ in range(n_pts)
        ]
        cases.append(
            {"name": f"random-{i:02d}", "dims": dims, "radius": radius, "path": path}
        )
    return cases


def build_stroke_fixtures() -> dict:
    cases = _handmade_cases() + _random_cases(30)
    assert len(cases) == 50
    out = []
    for i, case in enumerate(cases):
        voxels = stroke_voxels(case["path"], case["radius"], case["dims"])
        label = 1 + i % 4
        entry = {
            "name": case["name"],
            "dims": list(case["dims"]),
            "radius": case["radius"],
            "path": [list(p) for p in case["path"]],
            "label": label,
            "voxels": [list(v) for v in voxels],
        }
        # the exact wire line the client must produce for this stroke
        if voxels:
            entry["line"] = encode_message(
                "stroke", label=label, voxels=[list(v) for v in voxels]
            )
        out.append(entry)
    return {"version": 1, "cases": out}


def build_protocol_samples() -> dict:
    """Wire lines emitted by the server-side encoder, for byte-level and
    parse-level pinning on the client side."""
    return {
        "clientHello": encode_message("hello"),
        "serverHello": encode_message(
            "hello", dims=[32, 32], n_labels=3, mode="region", epsilon=1.5
        ),
        "impulseAck": encode_message(
            "impulse_ack", checksum="a3f09b12cd45", actuated=13, impulses=1
        ),
        "tickstats": encode_message(
            "tickstats", tick=7, t=0.4375, V=12.5, E=3.25, Vhat=9.25,
            rate_condition=True, actuated=13, reclassified=4, dice=0.9625,
        ),
        "tickstatsNoDice": encode_message(
            "tickstats", tick=0, t=0.0, V=2.0, E=0.0, Vhat=2.0,
            rate_condition=False, actuated=0, reclassified=0, dice=None,
        ),
        "frame": encode_message(
            "frame", tick=3, t=0.1875, checksum="0011aabbccdd", dims=[2, 3],
            rle=[[1, 4], [2, 2]],
            contours={"1": [[0.5, -0.5, 0.5, 0.5], [0.5, 0.5, 0.5, 1.5]], "2": []},
        ),
        "error": encode_message("error", message="unexpected inbound kind 'frame'"),
    }


def main() -> None:
    fixtures = REPO / "frontend" / "fixtures"
    fixtures.mkdir(parents=True, exist_ok=True)
    strokes = build_stroke_fixtures()
    (fixtures / "stroke-paths.json").write_text(
        json.dumps(strokes, indent=1) + "\n", encoding="utf-8"
    )
    samples = build_protocol_samples()
    (fixtures / "protocol-samples.json").write_text(
        json.dumps(samples, indent=1) + "\n", encoding="utf-8"
    )
    n_vox = sum(len(c["voxels"]) for c in strokes["cases"])
    print(f"wrote {len(strokes['cases'])} stroke fixtures ({n_vox} voxels) "
          f"and {len(samples)} protocol samples to {fixtures}")


if __name__ == "__main__":
    main()
