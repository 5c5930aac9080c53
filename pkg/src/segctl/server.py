"""Line-oriented JSON protocol serving live sessions over TCP.

One connection owns one session.  Messages are single JSON objects per
line, each carrying a ``kind``:

client -> server
    ``hello``   {}                                   handshake
    ``stroke``  {label, voxels: [[r, c], ...]}        paint + impulse

server -> client
    ``hello``        {dims, n_labels, mode, epsilon}
    ``impulse_ack``  {checksum, actuated, impulses}
    ``frame``        {tick, t, checksum, rle, contours} tick-boundary state
    ``tickstats``    {tick, t, V, E, Vhat, rate_condition, actuated,
                      reclassified, dice}
    ``error``        {message}

Bad stroke bodies produce an ``error`` and the connection stays open;
protocol violations (unparseable line, unknown kind) produce an ``error``
and close it.  Frames are best-effort: when the client cannot keep up they
are dropped, never strokes or acks.
"""
from __future__ import annotations

import json
import math
import socket
import socketserver
import threading

import numpy as np

from .errors import ProtocolError, SegctlError
from .inputs import Stroke
from .session import Session

MESSAGE_KINDS = ("hello", "frame", "stroke", "tickstats", "impulse_ack", "error")


def encode_message(kind: str, **body) -> str:
    if kind not in MESSAGE_KINDS:
        raise ProtocolError(f"unknown message kind {kind!r}")
    doc = {"kind": kind, **body}
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def parse_message(line: str) -> dict:
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"unparseable message: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("kind") not in MESSAGE_KINDS:
        raise ProtocolError(f"message kind missing or unknown in {line[:80]!r}")
    return doc


# --------------------------------------------------------------- encodings


def rle_encode(labels: np.ndarray) -> list:
    """[[value, run length], ...] over the flattened (C order) label map."""
    flat = np.asarray(labels).ravel()
    if flat.size == 0:
        return []
    edges = np.flatnonzero(np.diff(flat)) + 1
    starts = np.concatenate(([0], edges))
    ends = np.concatenate((edges, [flat.size]))
    return [[int(flat[s]), int(e - s)] for s, e in zip(starts, ends)]


def rle_decode(pairs: list, shape: tuple) -> np.ndarray:
    if not pairs:
        return np.zeros(shape, dtype=np.int64)
    flat = np.concatenate([np.full(n, v, dtype=np.int64) for v, n in pairs])
    return flat.reshape(shape)


def contour_segments(values: np.ndarray) -> list:
    """Zero-crossing segments of a 2D field as [r0, c0, r1, c1] rows.

    Each sign change between neighbouring pixel centers contributes one
    short segment perpendicular to that edge at the interpolated crossing."""
    segs: list = []
    if values.ndim != 2:
        return segs  # volumes ship as RLE only
    v = values

    def cross(a, b):
        return a / (a - b)  # position of the zero between two samples

    rows, cols = v.shape
    for axis in (0, 1):
        hi = np.take(v, range(1, v.shape[axis]), axis=axis)
        lo = np.take(v, range(0, v.shape[axis] - 1), axis=axis)
        change = np.sign(lo) * np.sign(hi) < 0
        for r, c in zip(*np.nonzero(change)):
            a = lo[r, c]
            if axis == 0:
                b = v[r + 1, c]
                t = cross(a, b)
                segs.append([float(r + t), float(c) - 0.5, float(r + t), float(c) + 0.5])
            else:
                b = v[r, c + 1]
                t = cross(a, b)
                segs.append([float(r) - 0.5, float(c + t), float(r) + 0.5, float(c + t)])
    return segs


def frame_message(session: Session) -> str:
    contours = {
        str(i): contour_segments(session.state.phi[i].values)
        for i in session.state.phi
    }
    return encode_message(
        "frame",
        tick=len(session.metrics.rows) - 1,
        t=session.state.t,
        checksum=session.checksum(),
        dims=list(session.img.dims),
        rle=rle_encode(session.state.labels),
        contours=contours,
    )


def tickstats_message(session: Session) -> str:
    row = session.metrics.rows[-1]
    return encode_message(
        "tickstats",
        tick=row.tick,
        t=row.t,
        V=row.V,
        E=row.E,
        Vhat=row.Vhat,
        rate_condition=bool(row.rate_condition),
        actuated=row.actuated,
        reclassified=row.reclassified,
        dice=None if math.isnan(row.dice) else row.dice,
    )


def _parse_stroke_body(doc: dict, dims: tuple) -> Stroke:
    try:
        label = int(doc["label"])
        voxels = tuple(tuple(int(c) for c in v) for v in doc["voxels"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SegctlError(f"malformed stroke body: {exc}") from exc
    if not voxels:
        raise SegctlError("stroke has no voxels")
    if any(len(v) != len(dims) for v in voxels):
        raise SegctlError(f"stroke voxels must have {len(dims)} coordinates")
    return Stroke(label, voxels)


# ------------------------------------------------------------------ server


class SessionServer(socketserver.ThreadingTCPServer):
    """Serves one live session per connection.

    ``session_factory`` builds a fresh Session per client; ``ticks_per_frame``
    engine ticks run between outbound frames while the connection idles."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, session_factory, ticks_per_frame: int = 5):
        self.session_factory = session_factory
        self.ticks_per_frame = max(1, int(ticks_per_frame))
        super().__init__(address, _Handler)

    @property
    def port(self) -> int:
        return self.server_address[1]


class _Handler(socketserver.BaseRequestHandler):
    def _send_line(self, line: str, droppable: bool = False) -> bool:
        payload = (line + "\n").encode("utf-8")
        try:
            if droppable:
                self.request.setblocking(False)
                try:
                    self.request.sendall(payload)
                finally:
                    self.request.setblocking(True)
                    self.request.settimeout(0.05)
            else:
                self.request.settimeout(None)
                self.request.sendall(payload)
                self.request.settimeout(0.05)
            return True
        except (BlockingIOError, InterruptedError, socket.timeout, TimeoutError):
            if droppable:
                return False  # backpressure: drop the frame
            raise

    def handle(self) -> None:
        session: Session = self.server.session_factory()
        self.request.settimeout(0.05)
        buf = b""
        greeted = False
        try:
            while True:
                try:
                    chunk = self.request.recv(65536)
                    if not chunk:
                        break
                    buf += chunk
                except (socket.timeout, TimeoutError):
                    chunk = None
                closed = False
                while b"\n" in buf:
                    raw, buf = buf.split(b"\n", 1)
                    if not raw.strip():
                        continue
                    if not self._dispatch(session, raw.decode("utf-8", "replace")):
                        closed = True
                        break
                    greeted = True
                if closed:
                    break
                if greeted and session.live:
                    for _ in range(self.server.ticks_per_frame):
                        session.tick()
                    if self._send_line(frame_message(session), droppable=True):
                        self._send_line(tickstats_message(session), droppable=True)
        except (ConnectionError, OSError):
            pass
        finally:
            if session.live:
                session.close()

    def _dispatch(self, session: Session, line: str) -> bool:
        """Handle one inbound line; False closes the connection."""
        try:
            doc = parse_message(line)
        except ProtocolError as exc:
            self._send_line(encode_message("error", message=str(exc)))
            return False
        kind = doc["kind"]
        if kind == "hello":
            self._send_line(
                encode_message(
                    "hello",
                    dims=list(session.img.dims),
                    n_labels=session.cfg.n_labels,
                    mode=session.cfg.dynamics,
                    epsilon=session.cfg.params.epsilon,
                )
            )
            return True
        if kind == "stroke":
            try:
                stroke = _parse_stroke_body(doc, session.img.dims)
                checksum = session.ingest_stroke(stroke)
            except SegctlError as exc:
                self._send_line(encode_message("error", message=str(exc)))
                return True  # bad strokes do not cost the connection
            self._send_line(
                encode_message(
                    "impulse_ack",
                    checksum=checksum,
                    actuated=session.actuated,
                    impulses=session.metrics.impulses,
                )
            )
            return True
        # server-only kinds arriving inbound are protocol violations
        self._send_line(
            encode_message("error", message=f"unexpected inbound kind {kind!r}")
        )
        return False


def serve_session(
    session_factory, host: str = "127.0.0.1", port: int = 0,
    ticks_per_frame: int = 5,
) -> SessionServer:
    """Bind and start a server thread; caller owns shutdown()."""
    server = SessionServer((host, port), session_factory, ticks_per_frame)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server
