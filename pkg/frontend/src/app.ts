/**
 * Browser entry: canvas annotator + metric strip over a WebSocket line
 * transport.  The server speaks newline-delimited JSON over TCP, so point
 * `wsUrl` at any line-preserving WebSocket↔TCP bridge in front of
 * `segctl-serve` (one bridged connection per session).
 *
 *   const app = createApp({
 *     canvas: document.querySelector("canvas#image"),
 *     panel: document.querySelector("canvas#metrics"),
 *     status: document.querySelector("#status"),
 *     wsUrl: "ws://127.0.0.1:8800",
 *   });
 */

import { LineSplitter, SessionClient, Transport, TransportHooks } from "./client.js";
import { pointColor } from "./metrics.js";
import { sliceStrokeVoxels } from "./raster.js";
import { colorForLabel } from "./palette.js";
import { DecodedFrame, decodeFrame, frameDrawList } from "./render.js";
import { ViewState } from "./view.js";

export function webSocketTransport(url: string): (hooks: TransportHooks) => Transport {
  return (hooks) => {
    const socket = new WebSocket(url);
    const splitter = new LineSplitter(hooks.onLine);
    const backlog: string[] = [];
    socket.onopen = () => {
      for (const line of backlog.splice(0)) {
        socket.send(line + "\n");
      }
    };
    socket.onmessage = (event) => splitter.feed(String(event.data));
    socket.onclose = () => hooks.onClose();
    socket.onerror = () => hooks.onClose();
    return {
      send(line: string) {
        if (socket.readyState === WebSocket.OPEN) {
          socket.send(line + "\n");
        } else if (socket.readyState === WebSocket.CONNECTING) {
          backlog.push(line);
        }
      },
      close() {
        socket.close();
      },
    };
  };
}

export interface AppOptions {
  canvas: HTMLCanvasElement;
  panel: HTMLCanvasElement;
  status: HTMLElement;
  wsUrl: string;
  scale?: number;
}

export function createApp(options: AppOptions) {
  const scale = options.scale ?? 8;
  const ctx = options.canvas.getContext("2d")!;
  const panelCtx = options.panel.getContext("2d")!;
  let view: ViewState | null = null;
  let decoded: DecodedFrame | null = null;
  let path: [number, number][] = [];

  const client = new SessionClient(webSocketTransport(options.wsUrl), {
    onEvent(event) {
      switch (event.kind) {
        case "status":
          if (view) {
            view.connection = event.status;
          }
          showStatus();
          return;
        case "hello":
          view = new ViewState(event.hello.n_labels, event.hello.dims);
          view.connection = "connected";
          sizeCanvas(event.hello.dims);
          showStatus();
          return;
        case "frame":
          decoded = decodeFrame(event.frame);
          paint();
          return;
        case "tickstats":
          paintPanel();
          return;
        case "ack":
        case "stroke-stale":
          paint();
          showStatus();
          return;
        case "server-error":
        case "bad-line":
          console.warn("segctl-ui:", event.message);
          return;
      }
    },
  });

  function sizeCanvas(dims: number[]) {
    const [rows, cols] = dims.length === 2 ? dims : [dims[1], dims[2]];
    options.canvas.width = cols * scale;
    options.canvas.height = rows * scale;
  }

  function showStatus() {
    if (!view) {
      options.status.textContent = "connecting";
      return;
    }
    const stale = client.pendingStrokes().filter((s) => s.status === "stale").length;
    options.status.textContent =
      `${view.connection} | label ${view.currentLabel}/${view.nLabels}` +
      ` | brush ${view.brushRadius}` +
      (view.is3d ? ` | slice ${view.slice}` : "") +
      (stale ? ` | ${stale} stroke(s) unacknowledged` : "");
  }

  function paint() {
    if (!view || !decoded) {
      return;
    }
    ctx.clearRect(0, 0, options.canvas.width, options.canvas.height);
    for (const poly of frameDrawList(decoded, view)) {
      ctx.strokeStyle = poly.color;
      ctx.lineWidth = 2;
      ctx.beginPath();
      for (const [r0, c0, r1, c1] of poly.segments) {
        ctx.moveTo((c0 + 0.5) * scale, (r0 + 0.5) * scale);
        ctx.lineTo((c1 + 0.5) * scale, (r1 + 0.5) * scale);
      }
      ctx.stroke();
    }
    const echoColor = colorForLabel(view.currentLabel, view.nLabels) ?? "#666666";
    ctx.fillStyle = echoColor + "80";
    for (const voxel of client.echoVoxels()) {
      const [r, c] = voxel.length === 2 ? voxel : [voxel[1], voxel[2]];
      ctx.fillRect(c * scale, r * scale, scale, scale);
    }
  }

  function paintPanel() {
    const points = client.panel.points;
    const w = options.panel.width;
    const h = options.panel.height;
    panelCtx.clearRect(0, 0, w, h);
    if (points.length < 2) {
      return;
    }
    const shown = points.slice(-w);
    const vMax = Math.max(...shown.map((p) => p.V), 1e-12);
    for (let i = 1; i < shown.length; i++) {
      const x0 = ((i - 1) / (shown.length - 1)) * w;
      const x1 = (i / (shown.length - 1)) * w;
      panelCtx.strokeStyle = pointColor(shown[i]);
      panelCtx.lineWidth = shown[i].flag === "descent-violation" ? 3 : 1;
      panelCtx.beginPath();
      panelCtx.moveTo(x0, h - (shown[i - 1].V / vMax) * (h - 2) - 1);
      panelCtx.lineTo(x1, h - (shown[i].V / vMax) * (h - 2) - 1);
      panelCtx.stroke();
    }
  }

  function canvasVoxel(event: PointerEvent): [number, number] {
    const rect = options.canvas.getBoundingClientRect();
    return [
      Math.round((event.clientY - rect.top) / scale - 0.5),
      Math.round((event.clientX - rect.left) / scale - 0.5),
    ];
  }

  options.canvas.addEventListener("pointerdown", (event) => {
    path = [canvasVoxel(event)];
  });
  options.canvas.addEventListener("pointermove", (event) => {
    if (path.length > 0) {
      path.push(canvasVoxel(event));
    }
  });
  options.canvas.addEventListener("pointerup", () => {
    if (!view || path.length === 0) {
      path = [];
      return;
    }
    const voxels = sliceStrokeVoxels(path, view.brushRadius, view.dims, view.slice);
    path = [];
    if (voxels.length > 0) {
      client.drawStroke(view.currentLabel, voxels);
      paint();
    }
  });

  window.addEventListener("keydown", (event) => {
    if (!view) {
      return;
    }
    if (/^[1-9]$/.test(event.key)) {
      view.setLabel(Number(event.key));
    } else if (event.key === "[") {
      view.setBrushRadius(view.brushRadius - 1);
    } else if (event.key === "]") {
      view.setBrushRadius(view.brushRadius + 1);
    } else if (event.key === "ArrowUp") {
      view.setSlice(view.slice + 1);
      paint();
    } else if (event.key === "ArrowDown") {
      view.setSlice(view.slice - 1);
      paint();
    } else if (event.key === "c") {
      view.toggle("contours");
      paint();
    } else if (event.key === "r") {
      client.connect();
    }
    showStatus();
  });

  window.setInterval(() => {
    client.refreshStaleness();
    showStatus();
  }, 500);

  client.connect();
  return client;
}
