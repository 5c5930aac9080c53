/**
 * Session client over a line transport.
 *
 * Stroke lifecycle (no silent loss): drawStroke() registers the stroke,
 * echoes it locally at once, and sends it when connected — otherwise it
 * queues.  A stroke not acknowledged within `staleMs` is flagged stale
 * but kept; acknowledgements (`impulse_ack`) reconcile the oldest
 * in-flight stroke, clearing its local echo in favor of the server's
 * authoritative frames.  Reconnecting opens a fresh transport, repeats
 * the handshake, and re-sends every unacknowledged stroke; the metric
 * panel deduplicates replayed samples by tick, so its series resumes.
 */

import { MetricPanel } from "./metrics.js";
import {
  FrameMessage,
  HelloMessage,
  ProtocolFormatError,
  ServerMessage,
  parseServerLine,
  serializeHello,
  serializeStroke,
} from "./protocol.js";

export interface Transport {
  send(line: string): void;
  close(): void;
}

export interface TransportHooks {
  onLine(line: string): void;
  onClose(): void;
}

export type TransportFactory = (hooks: TransportHooks) => Transport;

export type StrokeStatus = "pending" | "stale" | "acked";

export interface PendingStroke {
  seq: number;
  label: number;
  voxels: number[][];
  sentAt: number;
  status: StrokeStatus;
}

export type ClientEvent =
  | { kind: "status"; status: "connecting" | "connected" | "disconnected" }
  | { kind: "hello"; hello: HelloMessage }
  | { kind: "frame"; frame: FrameMessage }
  | { kind: "tickstats" }
  | { kind: "ack"; stroke: PendingStroke; checksum: string }
  | { kind: "stroke-stale"; stroke: PendingStroke }
  | { kind: "server-error"; message: string }
  | { kind: "bad-line"; message: string };

export interface ClientOptions {
  now?: () => number;
  staleMs?: number;
  quiescenceTicks?: number;
  onEvent?: (event: ClientEvent) => void;
}

export class SessionClient {
  readonly panel: MetricPanel;
  hello: HelloMessage | null = null;
  lastFrame: FrameMessage | null = null;
  checksum: string | null = null;
  status: "connecting" | "connected" | "disconnected" = "disconnected";

  private transport: Transport | null = null;
  private readonly strokes: PendingStroke[] = [];
  private nextSeq = 0;
  private readonly now: () => number;
  private readonly staleMs: number;
  private readonly emit: (event: ClientEvent) => void;

  constructor(
    private readonly factory: TransportFactory,
    options: ClientOptions = {},
  ) {
    this.now = options.now ?? Date.now;
    this.staleMs = options.staleMs ?? 2000;
    this.emit = options.onEvent ?? (() => undefined);
    this.panel = new MetricPanel(options.quiescenceTicks ?? 10);
  }

  connect(): void {
    this.transport?.close();
    this.status = "connecting";
    this.emit({ kind: "status", status: "connecting" });
    this.transport = this.factory({
      onLine: (line) => this.handleLine(line),
      onClose: () => this.handleClose(),
    });
    this.transport.send(serializeHello());
  }

  close(): void {
    this.transport?.close();
    this.transport = null;
    this.handleClose();
  }

  /** Unfinished and finished strokes, oldest first. */
  pendingStrokes(): readonly PendingStroke[] {
    return this.strokes;
  }

  /** Voxels of every stroke not yet acknowledged — the local echo. */
  echoVoxels(): number[][] {
    return this.strokes
      .filter((s) => s.status !== "acked")
      .flatMap((s) => s.voxels);
  }

  /**
   * Register a rasterized stroke: echo it, note it on the metric panel,
   * send it now (or queue it while disconnected).
   */
  drawStroke(label: number, voxels: number[][]): PendingStroke {
    const line = serializeStroke(label, voxels); // validates before queueing
    const stroke: PendingStroke = {
      seq: this.nextSeq++,
      label,
      voxels,
      sentAt: this.now(),
      status: "pending",
    };
    this.strokes.push(stroke);
    this.panel.noteStroke();
    if (this.status === "connected" && this.transport) {
      this.transport.send(line);
    }
    return stroke;
  }

  /** Flag unacknowledged strokes older than the staleness window. */
  refreshStaleness(): void {
    const cutoff = this.now() - this.staleMs;
    for (const stroke of this.strokes) {
      if (stroke.status === "pending" && stroke.sentAt <= cutoff) {
        stroke.status = "stale";
        this.emit({ kind: "stroke-stale", stroke });
      }
    }
  }

  private unacked(): PendingStroke[] {
    return this.strokes.filter((s) => s.status !== "acked");
  }

  private handleClose(): void {
    if (this.status === "disconnected") {
      return;
    }
    this.status = "disconnected";
    this.emit({ kind: "status", status: "disconnected" });
  }

  private handleLine(line: string): void {
    let message: ServerMessage;
    try {
      message = parseServerLine(line);
    } catch (exc) {
      if (exc instanceof ProtocolFormatError) {
        // malformed frames are dropped, the connection is kept
        this.emit({ kind: "bad-line", message: exc.message });
        return;
      }
      throw exc;
    }
    this.refreshStaleness();
    switch (message.kind) {
      case "hello": {
        this.hello = message;
        this.status = "connected";
        this.emit({ kind: "status", status: "connected" });
        this.emit({ kind: "hello", hello: message });
        for (const stroke of this.unacked()) {
          stroke.sentAt = this.now();
          stroke.status = "pending";
          this.transport?.send(serializeStroke(stroke.label, stroke.voxels));
        }
        return;
      }
      case "impulse_ack": {
        const stroke = this.unacked()[0];
        this.checksum = message.checksum;
        if (stroke) {
          stroke.status = "acked";
          this.emit({ kind: "ack", stroke, checksum: message.checksum });
        }
        return;
      }
      case "frame": {
        this.lastFrame = message;
        this.checksum = message.checksum;
        this.emit({ kind: "frame", frame: message });
        return;
      }
      case "tickstats": {
        this.panel.append(message);
        this.emit({ kind: "tickstats" });
        return;
      }
      case "error": {
        this.emit({ kind: "server-error", message: message.message });
        return;
      }
    }
  }
}

/**
 * Split a byte/text stream into lines for a transport implementation.
 * Feed chunks; complete lines invoke the callback in arrival order.
 */
export class LineSplitter {
  private tail = "";

  constructor(private readonly onLine: (line: string) => void) {}

  feed(chunk: string): void {
    this.tail += chunk;
    for (;;) {
      const nl = this.tail.indexOf("\n");
      if (nl < 0) {
        return;
      }
      const line = this.tail.slice(0, nl);
      this.tail = this.tail.slice(nl + 1);
      if (line.trim().length > 0) {
        this.onLine(line);
      }
    }
  }
}
