/**
 * View state for the annotation canvas: active label, brush radius,
 * slice (for volumes), overlay toggles, and connection status.  Setters
 * clamp to the legal ranges rather than throwing — a UI control should
 * saturate, not crash.
 */

export interface OverlayToggles {
  contours: boolean;
  heatmap: boolean;
  estimatorBand: boolean;
}

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export class ViewState {
  private label = 1;
  private radius = 2;
  private sliceIndex = 0;
  readonly overlays: OverlayToggles = {
    contours: true,
    heatmap: false,
    estimatorBand: false,
  };
  connection: ConnectionStatus = "connecting";

  constructor(
    readonly nLabels: number,
    readonly dims: number[],
  ) {
    if (!Number.isInteger(nLabels) || nLabels < 2) {
      throw new Error(`need at least two labels, got ${nLabels}`);
    }
    if (dims.length !== 2 && dims.length !== 3) {
      throw new Error(`expected 2 or 3 dims, got ${dims.length}`);
    }
  }

  get is3d(): boolean {
    return this.dims.length === 3;
  }

  get currentLabel(): number {
    return this.label;
  }

  setLabel(label: number): number {
    this.label = Math.min(this.nLabels, Math.max(1, Math.round(label)));
    return this.label;
  }

  get brushRadius(): number {
    return this.radius;
  }

  setBrushRadius(radius: number): number {
    this.radius = Math.min(64, Math.max(0, Math.round(radius)));
    return this.radius;
  }

  get slice(): number {
    return this.sliceIndex;
  }

  setSlice(slice: number): number {
    const top = this.is3d ? this.dims[0] - 1 : 0;
    this.sliceIndex = Math.min(top, Math.max(0, Math.round(slice)));
    return this.sliceIndex;
  }

  toggle(name: keyof OverlayToggles): boolean {
    this.overlays[name] = !this.overlays[name];
    return this.overlays[name];
  }
}
