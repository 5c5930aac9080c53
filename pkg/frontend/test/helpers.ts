import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { Transport, TransportHooks } from "../src/client.js";
import { canonicalJson } from "../src/protocol.js";

const HERE = dirname(fileURLToPath(import.meta.url));

export interface StrokeFixture {
  name: string;
  dims: [number, number];
  radius: number;
  path: [number, number][];
  label: number;
  voxels: [number, number][];
  line?: string;
}

export function strokeFixtures(): StrokeFixture[] {
  const doc = JSON.parse(
    readFileSync(join(HERE, "..", "fixtures", "stroke-paths.json"), "utf-8"),
  );
  return doc.cases as StrokeFixture[];
}

export function protocolSamples(): Record<string, string> {
  return JSON.parse(
    readFileSync(join(HERE, "..", "fixtures", "protocol-samples.json"), "utf-8"),
  );
}

// ------------------------------------------------------- fake transport

export class FakeTransport implements Transport {
  sent: string[] = [];
  closed = false;

  constructor(readonly hooks: TransportHooks) {}

  send(line: string): void {
    this.sent.push(line);
  }

  close(): void {
    this.closed = true;
  }

  /** Deliver one server line to the client. */
  serve(body: Record<string, unknown>): void {
    this.hooks.onLine(canonicalJson(body));
  }

  serveRaw(line: string): void {
    this.hooks.onLine(line);
  }

  /** Simulate the connection dropping. */
  drop(): void {
    this.hooks.onClose();
  }
}

export function fakeTransports(): {
  factory: (hooks: TransportHooks) => Transport;
  created: FakeTransport[];
} {
  const created: FakeTransport[] = [];
  return {
    factory: (hooks) => {
      const transport = new FakeTransport(hooks);
      created.push(transport);
      return transport;
    },
    created,
  };
}

export function helloBody(dims: number[] = [16, 16], nLabels = 3) {
  return {
    kind: "hello",
    dims,
    n_labels: nLabels,
    mode: "region",
    epsilon: 1.5,
  };
}

export function tickstatsBody(tick: number, V: number, extra: Record<string, unknown> = {}) {
  return {
    kind: "tickstats",
    tick,
    t: tick * 0.0625,
    V,
    E: 0.0,
    Vhat: V,
    rate_condition: false,
    actuated: 0,
    reclassified: 0,
    dice: null,
    ...extra,
  };
}
