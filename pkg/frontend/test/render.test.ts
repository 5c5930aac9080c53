import { describe, expect, it } from "vitest";

import { PALETTE, colorForLabel } from "../src/palette.js";
import type { FrameMessage } from "../src/protocol.js";
import { rleEncode } from "../src/rle.js";
import { contourOverlays, decodeFrame, frameDrawList, sliceBoundaries } from "../src/render.js";
import { ViewState } from "../src/view.js";

describe("palette", () => {
  it("background label renders as no overlay", () => {
    expect(colorForLabel(3, 3)).toBeNull();
    expect(colorForLabel(1, 3)).toBe(PALETTE[0]);
    expect(colorForLabel(2, 3)).toBe(PALETTE[1]);
  });

  it("cycles over a colorblind-safe set and rejects out-of-range labels", () => {
    expect(colorForLabel(9, 20)).toBe(PALETTE[0]);
    expect(() => colorForLabel(0, 3)).toThrow();
    expect(() => colorForLabel(4, 3)).toThrow();
  });
});

describe("view state clamps", () => {
  it("label, radius, and slice saturate at their bounds", () => {
    const view = new ViewState(4, [6, 32, 32]);
    expect(view.setLabel(99)).toBe(4);
    expect(view.setLabel(-2)).toBe(1);
    expect(view.setBrushRadius(-3)).toBe(0);
    expect(view.setBrushRadius(1e6)).toBe(64);
    expect(view.setSlice(17)).toBe(5);
    expect(view.setSlice(-1)).toBe(0);
  });

  it("2D images have a single slice", () => {
    const view = new ViewState(2, [16, 16]);
    expect(view.is3d).toBe(false);
    expect(view.setSlice(5)).toBe(0);
  });

  it("toggles flip overlay flags", () => {
    const view = new ViewState(2, [8, 8]);
    expect(view.overlays.contours).toBe(true);
    expect(view.toggle("contours")).toBe(false);
    expect(view.toggle("heatmap")).toBe(true);
  });
});

function frame2d(): FrameMessage {
  return {
    kind: "frame",
    tick: 1,
    t: 0.0625,
    checksum: "abcdefabcdef",
    dims: [2, 3],
    rle: [
      [1, 4],
      [3, 2],
    ],
    contours: {
      "1": [[0.5, -0.5, 0.5, 0.5]],
      "2": [],
      "3": [[1.0, 0.5, 1.0, 1.5]],
    },
  };
}

describe("frame rendering transforms", () => {
  it("draws foreground contours in palette colors, background never", () => {
    const view = new ViewState(3, [2, 3]);
    const polys = contourOverlays(frame2d(), view);
    expect(polys.map((p) => p.label)).toEqual([1]); // label 2 empty, 3 background
    expect(polys[0].color).toBe(PALETTE[0]);
  });

  it("honors the contour toggle", () => {
    const view = new ViewState(3, [2, 3]);
    view.toggle("contours");
    expect(contourOverlays(frame2d(), view)).toEqual([]);
  });

  it("slice boundaries sit on half-integer edges between differing labels", () => {
    const flat = Int32Array.from([1, 1, 2, 2]); // 2x2: top row 1s, bottom row 2s
    const segments = sliceBoundaries(flat, [2, 2], 0);
    expect(segments).toEqual([
      [0.5, -0.5, 0.5, 0.5],
      [0.5, 0.5, 0.5, 1.5],
    ]);
  });

  it("re-renders a new slice of a cached volume frame without a round trip", () => {
    // slice 0 uniform, slice 1 split: only slice 1 shows a boundary
    const volume = Int32Array.from([1, 1, 1, 1, 1, 2, 1, 2]);
    const frame: FrameMessage = {
      kind: "frame",
      tick: 0,
      t: 0,
      checksum: "000000000000",
      dims: [2, 2, 2],
      rle: rleEncode(volume),
      contours: {},
    };
    const decoded = decodeFrame(frame);
    const view = new ViewState(2, [2, 2, 2]);
    view.setSlice(0);
    expect(frameDrawList(decoded, view)[0].segments).toEqual([]);
    view.setSlice(1);
    const segs = frameDrawList(decoded, view)[0].segments;
    expect(segs).toEqual([
      [-0.5, 0.5, 0.5, 0.5],
      [0.5, 0.5, 1.5, 0.5],
    ]);
  });
});
