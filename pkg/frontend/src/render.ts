/**
 * Pure rendering transforms: frame messages → draw lists the canvas
 * layer paints.  Slice changes re-render from the cached decoded frame
 * without a server round trip.
 */

import { colorForLabel } from "./palette.js";
import type { ContourSegment, FrameMessage } from "./protocol.js";
import { rleDecode, sliceOf } from "./rle.js";
import type { ViewState } from "./view.js";

export interface LabelPolyline {
  label: number;
  color: string;
  segments: ContourSegment[];
}

/** Contour overlays for a 2D frame; background label draws nothing. */
export function contourOverlays(frame: FrameMessage, view: ViewState): LabelPolyline[] {
  if (!view.overlays.contours) {
    return [];
  }
  const out: LabelPolyline[] = [];
  for (const [key, segments] of Object.entries(frame.contours)) {
    const label = Number(key);
    const color = colorForLabel(label, view.nLabels);
    if (color !== null && segments.length > 0) {
      out.push({ label, color, segments });
    }
  }
  out.sort((a, b) => a.label - b.label);
  return out;
}

/**
 * Label boundaries of one slice of a decoded label map, as contour-style
 * segments on the half-integer grid between differing neighbors.  Used
 * for volumes, whose frames ship run-length payloads only.
 */
export function sliceBoundaries(
  flat: Int32Array,
  dims: number[],
  slice: number,
): ContourSegment[] {
  const view = sliceOf(flat, dims, slice);
  const { data, rows, cols } = view;
  const segments: ContourSegment[] = [];
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      const here = data[r * cols + c];
      if (c + 1 < cols && data[r * cols + c + 1] !== here) {
        segments.push([r - 0.5, c + 0.5, r + 0.5, c + 0.5]);
      }
      if (r + 1 < rows && data[(r + 1) * cols + c] !== here) {
        segments.push([r + 0.5, c - 0.5, r + 0.5, c + 0.5]);
      }
    }
  }
  return segments;
}

export interface DecodedFrame {
  frame: FrameMessage;
  flat: Int32Array;
}

export function decodeFrame(frame: FrameMessage): DecodedFrame {
  return { frame, flat: rleDecode(frame.rle, frame.dims) };
}

/**
 * Everything the canvas needs for the current view of a decoded frame:
 * per-label contour polylines for 2D frames, slice boundaries for
 * volumes, either way without another server round trip.
 */
export function frameDrawList(decoded: DecodedFrame, view: ViewState): LabelPolyline[] {
  if (decoded.frame.dims.length === 2) {
    return contourOverlays(decoded.frame, view);
  }
  if (!view.overlays.contours) {
    return [];
  }
  return [
    {
      label: 0,
      color: "#FFFFFF",
      segments: sliceBoundaries(decoded.flat, decoded.frame.dims, view.slice),
    },
  ];
}
