/**
 * Stroke rasterization: pointer path → the voxel set the engine's brush
 * paints.  Consecutive pointer samples are joined with Bresenham lines,
 * every line point stamps a Euclidean disk of the brush radius, and the
 * union is returned clipped to the image, deduplicated, in row-major
 * order.  The shared fixture vectors pin this against the engine's own
 * rasterization, so both sides must change together.
 */

export type Point = [number, number];

/** Integer grid points of the line from a to b, inclusive. */
export function bresenham(a: Point, b: Point): Point[] {
  let [r, c] = a;
  const [r1, c1] = b;
  const dr = Math.abs(r1 - r);
  const dc = -Math.abs(c1 - c);
  const sr = r < r1 ? 1 : -1;
  const sc = c < c1 ? 1 : -1;
  let err = dr + dc;
  const points: Point[] = [];
  for (;;) {
    points.push([r, c]);
    if (r === r1 && c === c1) {
      break;
    }
    const e2 = 2 * err;
    if (e2 >= dc) {
      err += dc;
      r += sr;
    }
    if (e2 <= dr) {
      err += dr;
      c += sc;
    }
  }
  return points;
}

function diskOffsets(radius: number): Point[] {
  const out: Point[] = [];
  for (let dr = -radius; dr <= radius; dr++) {
    for (let dc = -radius; dc <= radius; dc++) {
      if (dr * dr + dc * dc <= radius * radius) {
        out.push([dr, dc]);
      }
    }
  }
  return out;
}

/**
 * Swept-brush voxel set over a 2D image of shape dims = [rows, cols].
 * Pointer samples must already be integers (round before calling).
 */
export function strokeVoxels(path: Point[], radius: number, dims: Point): Point[] {
  if (path.length === 0) {
    return [];
  }
  if (!Number.isInteger(radius) || radius < 0) {
    throw new Error(`brush radius must be a non-negative integer, got ${radius}`);
  }
  for (const p of path) {
    if (!Number.isInteger(p[0]) || !Number.isInteger(p[1])) {
      throw new Error(`pointer sample ${JSON.stringify(p)} is not integral`);
    }
  }
  const centers = new Map<string, Point>();
  if (path.length === 1) {
    centers.set(`${path[0][0]},${path[0][1]}`, path[0]);
  } else {
    for (let i = 1; i < path.length; i++) {
      for (const p of bresenham(path[i - 1], path[i])) {
        centers.set(`${p[0]},${p[1]}`, p);
      }
    }
  }
  const offsets = diskOffsets(radius);
  const voxels = new Map<string, Point>();
  for (const [, center] of centers) {
    for (const [dr, dc] of offsets) {
      const r = center[0] + dr;
      const c = center[1] + dc;
      if (r >= 0 && r < dims[0] && c >= 0 && c < dims[1]) {
        voxels.set(`${r},${c}`, [r, c]);
      }
    }
  }
  return [...voxels.values()].sort((a, b) => a[0] - b[0] || a[1] - b[1]);
}

/**
 * In-plane stroke on one slice of a volume: the 2D rasterization over the
 * trailing two dims with the slice index prepended to every voxel.
 */
export function sliceStrokeVoxels(
  path: Point[],
  radius: number,
  dims: number[],
  slice: number,
): number[][] {
  if (dims.length === 2) {
    return strokeVoxels(path, radius, [dims[0], dims[1]]);
  }
  if (dims.length !== 3) {
    throw new Error(`expected 2 or 3 dims, got ${dims.length}`);
  }
  if (!Number.isInteger(slice) || slice < 0 || slice >= dims[0]) {
    throw new Error(`slice ${slice} outside [0, ${dims[0]})`);
  }
  return strokeVoxels(path, radius, [dims[1], dims[2]]).map(([r, c]) => [slice, r, c]);
}
