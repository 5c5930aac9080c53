/**
 * Frame payload decoding: run-length-encoded label maps, flattened in
 * C (row-major) order.
 */

export class FrameDecodeError extends Error {}

export function volumeSize(dims: number[]): number {
  return dims.reduce((a, b) => a * b, 1);
}

/** Decode [[value, run], ...] into a flat row-major Int32Array. */
export function rleDecode(pairs: [number, number][], dims: number[]): Int32Array {
  const size = volumeSize(dims);
  const flat = new Int32Array(size);
  let at = 0;
  for (const [value, run] of pairs) {
    if (run < 0 || at + run > size) {
      throw new FrameDecodeError(
        `run-length payload overflows ${size} voxels at offset ${at}`,
      );
    }
    flat.fill(value, at, at + run);
    at += run;
  }
  if (at !== size) {
    throw new FrameDecodeError(`run-length payload covers ${at} of ${size} voxels`);
  }
  return flat;
}

export function rleEncode(flat: ArrayLike<number>): [number, number][] {
  const pairs: [number, number][] = [];
  if (flat.length === 0) {
    return pairs;
  }
  let value = flat[0];
  let run = 1;
  for (let i = 1; i < flat.length; i++) {
    if (flat[i] === value) {
      run++;
    } else {
      pairs.push([value, run]);
      value = flat[i];
      run = 1;
    }
  }
  pairs.push([value, run]);
  return pairs;
}

export function labelAt(flat: Int32Array, dims: number[], voxel: number[]): number {
  let index = 0;
  for (let a = 0; a < dims.length; a++) {
    if (voxel[a] < 0 || voxel[a] >= dims[a]) {
      throw new FrameDecodeError(`voxel ${JSON.stringify(voxel)} outside ${dims}`);
    }
    index = index * dims[a] + voxel[a];
  }
  return flat[index];
}

/** Row-major 2D view of one slice of a decoded volume (or the whole 2D map). */
export function sliceOf(
  flat: Int32Array,
  dims: number[],
  slice: number,
): { data: Int32Array; rows: number; cols: number } {
  if (dims.length === 2) {
    return { data: flat, rows: dims[0], cols: dims[1] };
  }
  if (dims.length !== 3) {
    throw new FrameDecodeError(`expected 2 or 3 dims, got ${dims.length}`);
  }
  if (slice < 0 || slice >= dims[0]) {
    throw new FrameDecodeError(`slice ${slice} outside [0, ${dims[0]})`);
  }
  const plane = dims[1] * dims[2];
  return {
    data: flat.subarray(slice * plane, (slice + 1) * plane),
    rows: dims[1],
    cols: dims[2],
  };
}
