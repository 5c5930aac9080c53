/**
 * Headless end-to-end demo: connect to a running `segctl-serve` over TCP,
 * draw one brush stroke in the middle of the image, and stream the metric
 * panel to stdout until the session settles or a frame budget runs out.
 *
 *   segctl-serve image.rawf --labels 3 &
 *   node dist/demo.js 127.0.0.1 4710
 */

import * as net from "node:net";
import { pathToFileURL } from "node:url";

import { LineSplitter, SessionClient, Transport, TransportHooks } from "./client.js";
import { pointColor } from "./metrics.js";
import { strokeVoxels } from "./raster.js";

export function tcpTransport(host: string, port: number) {
  return (hooks: TransportHooks): Transport => {
    const splitter = new LineSplitter(hooks.onLine);
    const socket = net.createConnection({ host, port });
    socket.setEncoding("utf-8");
    socket.on("data", (chunk: string) => splitter.feed(chunk));
    socket.on("close", () => hooks.onClose());
    socket.on("error", () => hooks.onClose());
    return {
      send(line: string) {
        socket.write(line + "\n");
      },
      close() {
        socket.end();
      },
    };
  };
}

function main(): void {
  const host = process.argv[2] ?? "127.0.0.1";
  const port = Number(process.argv[3] ?? 4710);
  const frameBudget = Number(process.argv[4] ?? 40);

  let frames = 0;
  let stroked = false;
  let finished = false;
  const client = new SessionClient(tcpTransport(host, port), {
    onEvent(event) {
      switch (event.kind) {
        case "hello": {
          const { dims, n_labels, mode, epsilon } = event.hello;
          console.log(
            `connected: dims=[${dims}] labels=${n_labels} mode=${mode} epsilon=${epsilon}`,
          );
          return;
        }
        case "frame": {
          frames++;
          if (!stroked && frames >= 2 && client.hello) {
            const [rows, cols] = client.hello.dims;
            const voxels = strokeVoxels(
              [[Math.floor(rows / 3), Math.floor(cols / 3)]],
              2,
              [rows, cols],
            );
            client.drawStroke(1, voxels);
            stroked = true;
            console.log(`stroke: label 1, ${voxels.length} voxels`);
          }
          if (frames >= frameBudget) {
            finish(0);
          }
          return;
        }
        case "ack":
          console.log(`ack: checksum ${event.checksum}`);
          return;
        case "tickstats": {
          const p = client.panel.points[client.panel.points.length - 1];
          if (p) {
            console.log(
              `tick ${p.tick}  V=${p.V.toExponential(3)}  ` +
                `reclassified=${p.reclassified}  [${pointColor(p)}]`,
            );
          }
          return;
        }
        case "server-error":
        case "bad-line":
          console.error(`error: ${event.message}`);
          return;
        case "status":
          if (event.status === "disconnected") {
            finish(stroked ? 0 : 1);
          }
          return;
      }
    },
  });

  function finish(code: number): void {
    if (finished) {
      return;
    }
    finished = true;
    const flagged = client.panel.violations().length;
    console.log(
      `done: ${frames} frames, checksum ${client.checksum}, ` +
        `${flagged} descent violations flagged`,
    );
    client.close();
    process.exit(code);
  }

  client.connect();
  setTimeout(() => finish(1), 60_000);
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  main();
}
