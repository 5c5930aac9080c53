/**
 * Label colors: a colorblind-safe cycle (Okabe–Ito).  The background
 * label — by convention the last label — is rendered as no overlay.
 */

export const PALETTE: readonly string[] = [
  "#E69F00", // orange
  "#56B4E9", // sky blue
  "#009E73", // bluish green
  "#F0E442", // yellow
  "#0072B2", // blue
  "#D55E00", // vermillion
  "#CC79A7", // reddish purple
  "#999999", // grey
];

/** Overlay color for a label, or null for the background label. */
export function colorForLabel(label: number, nLabels: number): string | null {
  if (!Number.isInteger(label) || label < 1 || label > nLabels) {
    throw new Error(`label ${label} outside [1, ${nLabels}]`);
  }
  if (label === nLabels) {
    return null;
  }
  return PALETTE[(label - 1) % PALETTE.length];
}
