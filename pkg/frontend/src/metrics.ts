/**
 * Metric panel state: a rolling series of per-tick stability samples.
 *
 * Ticks are monotone: a sample whose tick is not beyond the newest kept
 * sample is ignored, so after a reconnect the server's replay of recent
 * samples merges into the series without duplicates.
 *
 * Descent flagging: once the last stroke's transient has had
 * `quiescenceTicks` ticks to spread, any rise of the stability monitor V
 * (beyond a 1e-6 relative tolerance, matching the engine's own monitor)
 * is flagged and drawn in red — a descent violation surfaced to the
 * human rather than hidden.
 */

import type { TickStatsMessage } from "./protocol.js";

export interface PanelPoint {
  tick: number;
  t: number;
  V: number;
  E: number;
  Vhat: number;
  rate_condition: boolean;
  actuated: number;
  reclassified: number;
  dice: number | null;
  flag: "ok" | "descent-violation";
}

const TOLERANCE = 1e-6;
const FLOOR = 1e-12;

function rises(prev: number, cur: number): boolean {
  return cur > prev + TOLERANCE * Math.max(prev, FLOOR);
}

export class MetricPanel {
  readonly points: PanelPoint[] = [];
  lastStrokeTick: number | null = null;

  constructor(
    readonly quiescenceTicks: number = 10,
    readonly capacity: number = 5000,
  ) {}

  get lastTick(): number {
    return this.points.length ? this.points[this.points.length - 1].tick : -1;
  }

  /** Record that the user just completed a stroke. */
  noteStroke(): void {
    this.lastStrokeTick = this.lastTick;
  }

  private quiesced(tick: number): boolean {
    return (
      this.lastStrokeTick !== null &&
      tick >= this.lastStrokeTick + this.quiescenceTicks
    );
  }

  /**
   * Append one sample; returns the stored point, or null when the sample
   * is a replay of a tick already kept.
   */
  append(sample: TickStatsMessage): PanelPoint | null {
    if (sample.tick <= this.lastTick) {
      return null;
    }
    const prev = this.points.length ? this.points[this.points.length - 1] : null;
    const flag: PanelPoint["flag"] =
      prev !== null && this.quiesced(sample.tick) && rises(prev.V, sample.V)
        ? "descent-violation"
        : "ok";
    const point: PanelPoint = {
      tick: sample.tick,
      t: sample.t,
      V: sample.V,
      E: sample.E,
      Vhat: sample.Vhat,
      rate_condition: sample.rate_condition,
      actuated: sample.actuated,
      reclassified: sample.reclassified,
      dice: sample.dice,
      flag,
    };
    this.points.push(point);
    if (this.points.length > this.capacity) {
      this.points.splice(0, this.points.length - this.capacity);
    }
    return point;
  }

  violations(): PanelPoint[] {
    return this.points.filter((p) => p.flag === "descent-violation");
  }
}

/** Trace color for one point: violations are red, everything else green. */
export function pointColor(point: PanelPoint): string {
  return point.flag === "descent-violation" ? "red" : "green";
}
