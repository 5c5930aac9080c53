/**
 * Line protocol: one JSON object per line, each with a `kind`.
 *
 * Client → server: `hello {}`, `stroke {label, voxels}`.
 * Server → client: `hello`, `impulse_ack`, `frame`, `tickstats`, `error`.
 *
 * Outbound lines are serialized canonically (keys sorted, no whitespace)
 * so a stroke sent from the UI is byte-identical to one sent from any
 * other client with the same voxel set.
 */

export type Voxel = number[];
export type ContourSegment = [number, number, number, number];

export interface HelloMessage {
  kind: "hello";
  dims: number[];
  n_labels: number;
  mode: "region" | "distance";
  epsilon: number;
}

export interface ImpulseAckMessage {
  kind: "impulse_ack";
  checksum: string;
  actuated: number;
  impulses: number;
}

export interface FrameMessage {
  kind: "frame";
  tick: number;
  t: number;
  checksum: string;
  dims: number[];
  rle: [number, number][];
  contours: Record<string, ContourSegment[]>;
}

export interface TickStatsMessage {
  kind: "tickstats";
  tick: number;
  t: number;
  V: number;
  E: number;
  Vhat: number;
  rate_condition: boolean;
  actuated: number;
  reclassified: number;
  dice: number | null;
}

export interface ErrorMessage {
  kind: "error";
  message: string;
}

export type ServerMessage =
  | HelloMessage
  | ImpulseAckMessage
  | FrameMessage
  | TickStatsMessage
  | ErrorMessage;

export class ProtocolFormatError extends Error {}

/** JSON with object keys sorted at every level and no whitespace. */
export function canonicalJson(value: unknown): string {
  if (value === null || typeof value !== "object") {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return "[" + value.map(canonicalJson).join(",") + "]";
  }
  const record = value as Record<string, unknown>;
  const body = Object.keys(record)
    .sort()
    .map((k) => JSON.stringify(k) + ":" + canonicalJson(record[k]))
    .join(",");
  return "{" + body + "}";
}

export function serializeHello(): string {
  return canonicalJson({ kind: "hello" });
}

export function serializeStroke(label: number, voxels: Voxel[]): string {
  if (!Number.isInteger(label) || label < 1) {
    throw new ProtocolFormatError(`stroke label must be a positive integer, got ${label}`);
  }
  if (voxels.length === 0) {
    throw new ProtocolFormatError("stroke has no voxels");
  }
  for (const v of voxels) {
    if (!v.every(Number.isInteger)) {
      throw new ProtocolFormatError(`non-integer voxel ${JSON.stringify(v)}`);
    }
  }
  return canonicalJson({ kind: "stroke", label, voxels });
}

// ----------------------------------------------------------------- parsing

function need(obj: Record<string, unknown>, key: string): unknown {
  if (!(key in obj)) {
    throw new ProtocolFormatError(`missing field ${key}`);
  }
  return obj[key];
}

function num(obj: Record<string, unknown>, key: string): number {
  const v = need(obj, key);
  if (typeof v !== "number" || !Number.isFinite(v)) {
    throw new ProtocolFormatError(`field ${key} must be a finite number`);
  }
  return v;
}

function str(obj: Record<string, unknown>, key: string): string {
  const v = need(obj, key);
  if (typeof v !== "string") {
    throw new ProtocolFormatError(`field ${key} must be a string`);
  }
  return v;
}

function intArray(value: unknown, what: string): number[] {
  if (!Array.isArray(value) || !value.every(Number.isInteger)) {
    throw new ProtocolFormatError(`${what} must be an array of integers`);
  }
  return value as number[];
}

function segments(value: unknown, what: string): ContourSegment[] {
  if (!Array.isArray(value)) {
    throw new ProtocolFormatError(`${what} must be an array`);
  }
  return value.map((seg, i) => {
    if (
      !Array.isArray(seg) ||
      seg.length !== 4 ||
      !seg.every((x) => typeof x === "number" && Number.isFinite(x))
    ) {
      throw new ProtocolFormatError(`${what}[${i}] must be [r0, c0, r1, c1]`);
    }
    return seg as ContourSegment;
  });
}

/** Parse and validate one server line.  Throws ProtocolFormatError. */
export function parseServerLine(line: string): ServerMessage {
  let doc: unknown;
  try {
    doc = JSON.parse(line);
  } catch (exc) {
    throw new ProtocolFormatError(`unparseable message: ${(exc as Error).message}`);
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new ProtocolFormatError("message must be a JSON object");
  }
  const obj = doc as Record<string, unknown>;
  const kind = obj.kind;
  switch (kind) {
    case "hello": {
      const mode = str(obj, "mode");
      if (mode !== "region" && mode !== "distance") {
        throw new ProtocolFormatError(`unknown mode ${mode}`);
      }
      return {
        kind,
        dims: intArray(need(obj, "dims"), "dims"),
        n_labels: num(obj, "n_labels"),
        mode,
        epsilon: num(obj, "epsilon"),
      };
    }
    case "impulse_ack":
      return {
        kind,
        checksum: str(obj, "checksum"),
        actuated: num(obj, "actuated"),
        impulses: num(obj, "impulses"),
      };
    case "frame": {
      const rleRaw = need(obj, "rle");
      if (!Array.isArray(rleRaw)) {
        throw new ProtocolFormatError("rle must be an array");
      }
      const rle = rleRaw.map((pair, i) => {
        const p = intArray(pair, `rle[${i}]`);
        if (p.length !== 2 || p[1] < 0) {
          throw new ProtocolFormatError(`rle[${i}] must be [value, run >= 0]`);
        }
        return p as [number, number];
      });
      const contoursRaw = need(obj, "contours");
      if (typeof contoursRaw !== "object" || contoursRaw === null || Array.isArray(contoursRaw)) {
        throw new ProtocolFormatError("contours must be an object keyed by label");
      }
      const contours: Record<string, ContourSegment[]> = {};
      for (const [label, segs] of Object.entries(contoursRaw as Record<string, unknown>)) {
        contours[label] = segments(segs, `contours[${label}]`);
      }
      return {
        kind,
        tick: num(obj, "tick"),
        t: num(obj, "t"),
        checksum: str(obj, "checksum"),
        dims: intArray(need(obj, "dims"), "dims"),
        rle,
        contours,
      };
    }
    case "tickstats": {
      const dice = need(obj, "dice");
      if (dice !== null && (typeof dice !== "number" || !Number.isFinite(dice))) {
        throw new ProtocolFormatError("dice must be a finite number or null");
      }
      const rate = need(obj, "rate_condition");
      if (typeof rate !== "boolean") {
        throw new ProtocolFormatError("rate_condition must be a boolean");
      }
      return {
        kind,
        tick: num(obj, "tick"),
        t: num(obj, "t"),
        V: num(obj, "V"),
        E: num(obj, "E"),
        Vhat: num(obj, "Vhat"),
        rate_condition: rate,
        actuated: num(obj, "actuated"),
        reclassified: num(obj, "reclassified"),
        dice: dice as number | null,
      };
    }
    case "error":
      return { kind, message: str(obj, "message") };
    default:
      throw new ProtocolFormatError(`message kind missing or unknown in ${line.slice(0, 80)}`);
  }
}
