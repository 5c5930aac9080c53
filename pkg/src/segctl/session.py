"""Event-sourced session engine.

A session owns one image, one engine state, and one append-only event log.
Strokes and ticks are the only mutations; both are logged, and a log replays
to a bit-identical label map (the determinism contract the golden-log suite
enforces).  The log is self-contained: the init event embeds the config, the
image, the initial labels, the seed sets, and the reference, so a log file
is the whole experiment.

Log grammar (UTF-8, one event per line)::

    seglog v1 <config-digest> <seed>
    init <session-id> <base64(zlib(json))>
    stroke <session-id> <label> <t> <k> <n> <c0_0> <c0_1> [<c0_2>] ...
    impulse
    tick
    snapshot <checksum>

Coordinates are written in array-axis order.  ``<k>`` is the per-label
stroke counter, ``<n>`` the voxel count.  Checksums are sha256 truncated to
12 hex digits over the label map bytes.
"""
from __future__ import annotations

import base64
import hashlib
import json
import math
import zlib
from dataclasses import dataclass, field as dc_field

import numpy as np

from .control import (
    ControlParams,
    EngineState,
    apply_impulse,
    coupled_step,
    lyapunov_sample,
    rate_condition_check,
)
from .distance import assign_labels, seed_distance
from .errors import (
    ConfigDigestError,
    DimensionMismatchError,
    LabelCoverageError,
    MalformedLogError,
    ReplayChecksumError,
    StrokeBoundsError,
    UnknownLabelError,
)
from .grid import ImageVolume, dice, gradient_magnitude_sq
from .inputs import (
    U_CAP,
    Stroke,
    accumulate_distance,
    accumulate_region,
    diffuse,
    diffusion_dt,
    stroke_kernel,
)
from .levelset import LevelSetField, init_from_labels, saturated_from_labels
from .region import g_M_bound

LOG_MAGIC = "seglog v1"


@dataclass(frozen=True)
class SessionConfig:
    """Everything that shapes a session's dynamics, fixed at start."""

    dynamics: str = "region"
    n_labels: int = 2  # including the background label (the largest value)
    params: ControlParams = ControlParams()
    d_max: float | None = None  # None: 10% of the image diagonal
    diffusion_budget: int = 50  # diffusion steps granted per stroke
    diffusion_steps_per_tick: int = 5
    dt: float = 0.1  # per-tick time cap; CFL/stiffness may shorten it
    review_interval: int = 25  # ticks between synthetic-user looks
    seed: int = 0
    oracle: bool = False  # pin the estimator to the reference (monitoring mode)

    def __post_init__(self) -> None:
        if self.dynamics not in ("region", "distance"):
            raise ValueError(f"unknown dynamics {self.dynamics!r}")
        if self.n_labels < 2:
            raise ValueError("need at least two labels (foreground + background)")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.review_interval < 1:
            raise ValueError("review interval must be at least 1")
        if self.diffusion_budget < 0 or self.diffusion_steps_per_tick < 0:
            raise ValueError("diffusion counts cannot be negative")

    def to_dict(self) -> dict:
        return {
            "dynamics": self.dynamics,
            "n_labels": self.n_labels,
            "params": {
                "alpha_margin": self.params.alpha_margin,
                "nu": self.params.nu,
                "rho": self.params.rho,
                "epsilon": self.params.epsilon,
            },
            "d_max": self.d_max,
            "diffusion_budget": self.diffusion_budget,
            "diffusion_steps_per_tick": self.diffusion_steps_per_tick,
            "dt": self.dt,
            "review_interval": self.review_interval,
            "seed": self.seed,
            "oracle": self.oracle,
        }

    @staticmethod
    def from_dict(d: dict) -> "SessionConfig":
        p = d["params"]
        return SessionConfig(
            dynamics=d["dynamics"],
            n_labels=d["n_labels"],
            params=ControlParams(
                alpha_margin=p["alpha_margin"],
                nu=p["nu"],
                rho=p["rho"],
                epsilon=p["epsilon"],
            ),
            d_max=d["d_max"],
            diffusion_budget=d["diffusion_budget"],
            diffusion_steps_per_tick=d["diffusion_steps_per_tick"],
            dt=d["dt"],
            review_interval=d["review_interval"],
            seed=d["seed"],
            oracle=d["oracle"],
        )

    @property
    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    kind: str  # init | stroke | impulse | tick | snapshot
    line: str


@dataclass(frozen=True)
class TickRow:
    """One row of the metric table (also the CSV export schema)."""

    tick: int
    t: float
    V: float
    E: float
    Vhat: float
    rate_condition: bool
    actuated: int
    reclassified: int
    dice: float  # min over foreground labels; nan without a reference


@dataclass
class Metrics:
    rows: list = dc_field(default_factory=list)
    impulses: int = 0

    @property
    def actuated(self) -> int:
        return self.rows[-1].actuated if self.rows else 0

    @property
    def lyapunov(self) -> list:
        return [(r.t, r.V, r.E, r.Vhat) for r in self.rows]


@dataclass(frozen=True)
class ErrorDecomposition:
    """Per-label partition of the map against a reference."""

    correct: dict
    misclassified: dict
    unreached: dict


def decompose_errors(
    labels: np.ndarray, reference: np.ndarray, n_labels: int
) -> ErrorDecomposition:
    if labels.shape != reference.shape:
        raise DimensionMismatchError(
            f"labels {labels.shape} vs reference {reference.shape}"
        )
    correct, mis, unreached = {}, {}, {}
    for i in range(1, n_labels + 1):
        cur = labels == i
        ref = reference == i
        correct[i] = cur & ref
        mis[i] = cur & ~ref
        unreached[i] = ref & ~cur
    return ErrorDecomposition(correct, mis, unreached)


def labels_checksum(labels: np.ndarray) -> str:
    arr = np.ascontiguousarray(labels, dtype="<i8")
    h = hashlib.sha256()
    h.update(repr(arr.shape).encode())
    h.update(arr.tobytes())
    return h.hexdigest()[:12]


def _encode_array(arr: np.ndarray) -> dict:
    arr = np.ascontiguousarray(arr)
    return {
        "shape": list(arr.shape),
        "dtype": arr.dtype.str,
        "data": base64.b64encode(zlib.compress(arr.tobytes())).decode("ascii"),
    }


def _decode_array(d: dict) -> np.ndarray:
    raw = zlib.decompress(base64.b64decode(d["data"]))
    return np.frombuffer(raw, dtype=np.dtype(d["dtype"])).reshape(d["shape"]).copy()


def _index_arrays(voxels) -> tuple:
    """Tuple of per-axis index arrays for a voxel list (numpy fancy index)."""
    nd = len(voxels[0])
    return tuple(np.asarray([v[a] for v in voxels], dtype=np.intp) for a in range(nd))


class Session:
    """Single-writer session: construct via :func:`start_session`."""

    def __init__(
        self,
        img: ImageVolume,
        cfg: SessionConfig,
        labels: np.ndarray,
        seeds: dict | None,
        reference: np.ndarray | None,
        log_path=None,
    ):
        if labels.shape != img.dims:
            raise DimensionMismatchError(f"labels {labels.shape} vs image {img.dims}")
        present = set(np.unique(labels).tolist())
        wanted = set(range(1, cfg.n_labels + 1))
        if not present <= wanted:
            raise LabelCoverageError(f"labels {sorted(present - wanted)} out of range")
        if not wanted <= present:
            raise LabelCoverageError(f"labels {sorted(wanted - present)} missing from init")
        if reference is not None and reference.shape != img.dims:
            raise DimensionMismatchError("reference dims do not match image")
        if cfg.oracle and reference is None:
            raise ValueError("oracle mode needs a reference label map")

        self.img = img
        self.cfg = cfg
        self.reference = None if reference is None else reference.astype(np.int64)
        self.session_id = f"s{cfg.seed}"
        self.live = True
        eps = cfg.params.epsilon

        gcost = gradient_magnitude_sq(img)
        if cfg.dynamics == "region":
            g_m = g_M_bound(img, eps)
        else:
            g_m = gcost
        self._gate_bound = g_M_bound(img, eps)  # diffusion gate uses the image bound

        n = cfg.n_labels
        phi = {i: init_from_labels(labels, i, eps) for i in range(1, n + 1)}
        est = {
            i: LevelSetField(phi[i].values.copy(), i, eps, phi[i].band.copy())
            for i in phi
        }
        oracle = None
        if cfg.oracle:
            oracle = {i: saturated_from_labels(self.reference, i, eps) for i in phi}

        if seeds is not None:  # plain-int coords: they travel in the log payload
            seeds = {
                int(k): [tuple(int(c) for c in v) for v in vs]
                for k, vs in seeds.items()
            }
        self.support: dict | None = None  # distance mode: label -> voxel list
        dists = None
        if cfg.dynamics == "distance":
            if seeds is None:
                seeds = {
                    i: [tuple(int(c) for c in v) for v in np.argwhere(labels == i)]
                    for i in range(1, n + 1)
                }
            missing = [i for i in range(1, n + 1) if not seeds.get(i)]
            if missing:
                raise LabelCoverageError(f"distance mode needs seeds for labels {missing}")
            self.support = {i: [tuple(v) for v in seeds[i]] for i in range(1, n + 1)}
            dists = {
                i: seed_distance(gcost, self.support[i], img.spacing)
                for i in range(1, n + 1)
            }

        self.u = None
        if cfg.dynamics == "region":
            self.u = {i: np.zeros(img.dims) for i in range(1, n + 1)}
            U = {i: np.zeros(img.dims) for i in range(1, n + 1)}
        else:
            U = {i: accumulate_distance(dists, i) for i in range(1, n + 1)}

        self.state = EngineState(
            img=img,
            mode=cfg.dynamics,
            epsilon=eps,
            labels=labels.astype(np.int64).copy(),
            n_labels=n,
            phi=phi,
            est=est,
            U=U,
            gcost=gcost,
            g_m=g_m,
            alpha_sq=g_m + cfg.params.alpha_margin,
            dists=dists,
            oracle=oracle,
        )

        self.d_max = cfg.d_max if cfg.d_max is not None else 0.1 * img.diagonal
        self._dt_diffusion = diffusion_dt(img.spacing)
        self._diffusion_remaining = 0
        self._stroke_counts = {i: 0 for i in range(1, n + 1)}
        self._actuated = 0
        self._seeds_arg = seeds
        self._init_labels = labels.astype(np.int64).copy()

        self._last_tick_labels = self.state.labels.copy()
        self.metrics = Metrics()
        self.events: list[SessionEvent] = []
        self._seq = 0
        self._log_file = open(log_path, "w", encoding="utf-8") if log_path else None
        self._emit_raw(f"{LOG_MAGIC} {cfg.digest} {cfg.seed}")
        self._emit_event("init", f"init {self.session_id} {self._init_payload()}")
        self._sample(reclassified=0)

    # ------------------------------------------------------------- logging

    def _init_payload(self) -> str:
        img_vals = self.img.values
        if img_vals.shape[-1] == 1:
            img_vals = img_vals[..., 0]
        doc = {
            "config": self.cfg.to_dict(),
            "spacing": list(self.img.spacing),
            "image": _encode_array(img_vals),
            "labels": _encode_array(self._init_labels),
            "seeds": None
            if self._seeds_arg is None
            else {str(k): [list(v) for v in vs] for k, vs in self._seeds_arg.items()},
            "reference": None if self.reference is None else _encode_array(self.reference),
        }
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
        return base64.b64encode(zlib.compress(blob)).decode("ascii")

    def _emit_raw(self, line: str) -> None:
        if self._log_file is not None:
            self._log_file.write(line + "\n")
            self._log_file.flush()
        self._lines = getattr(self, "_lines", [])
        self._lines.append(line)

    def _emit_event(self, kind: str, line: str) -> None:
        self.events.append(SessionEvent(self._seq, kind, line))
        self._seq += 1
        self._emit_raw(line)

    @property
    def log_text(self) -> str:
        return "\n".join(self._lines) + "\n"

    # ------------------------------------------------------------- metrics

    @property
    def actuated(self) -> int:
        return self._actuated

    def checksum(self) -> str:
        return labels_checksum(self.state.labels)

    def dice_by_label(self) -> dict:
        if self.reference is None:
            return {}
        return {
            i: dice(self.state.labels, self.reference, i)
            for i in range(1, self.cfg.n_labels + 1)
        }

    def min_foreground_dice(self) -> float:
        if self.reference is None:
            return math.nan
        n = self.cfg.n_labels
        fg = range(1, n) if n > 1 else [1]
        return min(dice(self.state.labels, self.reference, i) for i in fg)

    def _sample(self, reclassified: int) -> TickRow:
        ls = lyapunov_sample(self.state)
        row = TickRow(
            tick=len(self.metrics.rows),
            t=self.state.t,
            V=ls.V,
            E=ls.E,
            Vhat=ls.Vhat,
            rate_condition=rate_condition_check(self.state, self.cfg.params.rho),
            actuated=self._actuated,
            reclassified=reclassified,
            dice=self.min_foreground_dice(),
        )
        self.metrics.rows.append(row)
        return row

    def write_lyapunov_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(
                ["tick", "t", "V", "E", "Vhat", "rate_condition", "actuated",
                 "reclassified", "dice"]
            )
            for r in self.metrics.rows:
                w.writerow(
                    [r.tick, repr(r.t), repr(r.V), repr(r.E), repr(r.Vhat),
                     int(r.rate_condition), r.actuated, r.reclassified,
                     "nan" if math.isnan(r.dice) else repr(r.dice)]
                )

    # ----------------------------------------------------------- mutation

    def _recompute_U(self) -> None:
        st = self.state
        n = self.cfg.n_labels
        if self.cfg.dynamics == "region":
            st.U = {i: accumulate_region(self.u, i) for i in range(1, n + 1)}
        else:
            st.U = {i: accumulate_distance(st.dists, i) for i in range(1, n + 1)}

    def ingest_stroke(self, stroke: Stroke) -> str:
        if not self.live:
            raise MalformedLogError("session is closed")
        n = self.cfg.n_labels
        if not (1 <= stroke.label <= n):
            raise UnknownLabelError(f"label {stroke.label} outside 1..{n}")
        stroke.check_bounds(self.img.dims)

        label = stroke.label
        idx = _index_arrays(stroke.voxels)
        st = self.state

        if self.cfg.dynamics == "region":
            # newest gesture wins on its own voxels: competitors' support is
            # cleared there so the impulse sign precondition holds
            for j in self.u:
                if j != label:
                    self.u[j][idx] = 0.0
            kernel = stroke_kernel(stroke, st.gcost, self.d_max, self.img.spacing)
            self.u[label] = np.clip(self.u[label] + kernel, 0.0, U_CAP)
            self._diffusion_remaining = self.cfg.diffusion_budget
        else:
            # newest gesture wins: its voxels leave every other label's
            # support set (validated before anything mutates)
            new_voxels = set(stroke.voxels)
            kept = {}
            for j, vox in self.support.items():
                if j == label:
                    continue
                remaining = [v for v in vox if v not in new_voxels]
                if len(remaining) != len(vox):
                    if not remaining:
                        raise LabelCoverageError(
                            f"stroke would erase all support for label {j}"
                        )
                    kept[j] = remaining
            already = set(self.support[label])
            self.support[label] = self.support[label] + [
                v for v in stroke.voxels if v not in already
            ]
            self.support.update(kept)
            for j in {label, *kept}:
                st.dists[j] = seed_distance(st.gcost, self.support[j], self.img.spacing)
        self._recompute_U()

        k = self._stroke_counts[label]
        self._stroke_counts[label] += 1
        coords = " ".join(" ".join(str(c) for c in v) for v in stroke.voxels)
        self._emit_event(
            "stroke",
            f"stroke {self.session_id} {label} {self.state.t!r} {k} "
            f"{len(stroke.voxels)} {coords}",
        )
        apply_impulse(st, label, idx)
        self._actuated += len(stroke.voxels)
        self.metrics.impulses += 1
        self._emit_event("impulse", "impulse")
        return self.checksum()

    def tick(self) -> TickRow:
        if not self.live:
            raise MalformedLogError("session is closed")
        if (
            self.cfg.dynamics == "region"
            and self._diffusion_remaining > 0
            and self.cfg.diffusion_steps_per_tick > 0
        ):
            steps = min(self.cfg.diffusion_steps_per_tick, self._diffusion_remaining)
            for i in self.u:
                self.u[i] = diffuse(
                    self.u[i],
                    self._gate_bound,
                    steps,
                    self._dt_diffusion,
                    self.cfg.params.epsilon,
                    self.img.spacing,
                )
            self._diffusion_remaining -= steps
            self._recompute_U()
        coupled_step(self.state, self.cfg.dt)
        # count against the previous tick, so label flips applied by strokes
        # in between are charged to the tick that absorbs them
        reclassified = int((self.state.labels != self._last_tick_labels).sum())
        self._last_tick_labels = self.state.labels.copy()
        self._emit_event("tick", "tick")
        return self._sample(reclassified)

    def log_snapshot(self) -> str:
        chk = self.checksum()
        self._emit_event("snapshot", f"snapshot {chk}")
        return chk

    def close(self) -> str:
        chk = self.log_snapshot()
        if self._log_file is not None:
            self._log_file.close()
            self._log_file = None
        self.live = False
        return chk


def start_session(
    img: ImageVolume,
    init,
    cfg: SessionConfig,
    reference: np.ndarray | None = None,
    log_path=None,
) -> Session:
    """Open a session from an initial label map or per-label seed sets.

    Seed sets are a dict ``{label: [voxel tuples]}``.  In region mode,
    unseeded voxels fall to the background label; in distance mode every
    label needs at least one seed and the initial map is the geodesic
    Voronoi partition of the seeds.
    """
    seeds = None
    if isinstance(init, dict):
        seeds = {int(k): [tuple(int(c) for c in v) for v in vs] for k, vs in init.items()}
        bad = [k for k in seeds if not (1 <= k <= cfg.n_labels)]
        if bad:
            raise UnknownLabelError(f"seed labels {bad} outside 1..{cfg.n_labels}")
        for k, vs in seeds.items():
            for v in vs:
                if len(v) != len(img.dims) or any(
                    not (0 <= c < img.dims[a]) for a, c in enumerate(v)
                ):
                    raise StrokeBoundsError(f"seed {v} outside image {img.dims}")
        if cfg.dynamics == "distance":
            missing = [i for i in range(1, cfg.n_labels + 1) if not seeds.get(i)]
            if missing:
                raise LabelCoverageError(
                    f"distance mode needs seeds for labels {missing}"
                )
            gcost = gradient_magnitude_sq(img)
            dists = {
                i: seed_distance(gcost, seeds[i], img.spacing)
                for i in range(1, cfg.n_labels + 1)
            }
            labels = assign_labels(dists)
        else:
            labels = np.full(img.dims, cfg.n_labels, dtype=np.int64)
            for k, vs in seeds.items():
                if vs:
                    labels[_index_arrays(vs)] = k
    else:
        labels = np.asarray(init, dtype=np.int64)
    return Session(img, cfg, labels, seeds, reference, log_path=log_path)


# ------------------------------------------------------------------ replay


def _parse_stroke_line(parts: list[str], nd: int) -> tuple[str, Stroke, float, int]:
    # stroke <sid> <label> <t> <k> <n> coords...
    if len(parts) < 6:
        raise MalformedLogError("short stroke line")
    sid = parts[1]
    try:
        label = int(parts[2])
        t = float(parts[3])
        k = int(parts[4])
        count = int(parts[5])
        flat = [int(c) for c in parts[6:]]
    except ValueError as exc:
        raise MalformedLogError(f"bad stroke field: {exc}") from exc
    if len(flat) != count * nd:
        raise MalformedLogError(
            f"stroke coordinate count {len(flat)} != {count} voxels x {nd} axes"
        )
    voxels = tuple(tuple(flat[i * nd : (i + 1) * nd]) for i in range(count))
    return sid, Stroke(label, voxels), t, k


def replay(log_text: str) -> Session:
    """Re-execute a session log; returns the finished (closed) session.

    Raises MalformedLogError for structural damage, ConfigDigestError when
    the header digest does not match the embedded config, and
    ReplayChecksumError when re-execution diverges from a recorded snapshot
    (the determinism contract).
    """
    if not log_text.endswith("\n"):
        raise MalformedLogError("log does not end with a newline (truncated?)")
    lines = log_text.splitlines()
    if not lines:
        raise MalformedLogError("empty log")
    head = lines[0].split()
    if len(head) != 4 or " ".join(head[:2]) != LOG_MAGIC:
        raise MalformedLogError(f"bad header {lines[0]!r}")
    digest, seed_str = head[2], head[3]

    if len(lines) < 2 or not lines[1].startswith("init "):
        raise MalformedLogError("missing init event")
    init_parts = lines[1].split()
    if len(init_parts) != 3:
        raise MalformedLogError("malformed init line")
    sid = init_parts[1]
    try:
        doc = json.loads(zlib.decompress(base64.b64decode(init_parts[2])))
    except Exception as exc:
        raise MalformedLogError(f"undecodable init payload: {exc}") from exc

    cfg = SessionConfig.from_dict(doc["config"])
    if cfg.digest != digest:
        raise ConfigDigestError(
            f"header digest {digest} != config digest {cfg.digest}"
        )
    if str(cfg.seed) != seed_str or sid != f"s{cfg.seed}":
        raise MalformedLogError("seed/session-id mismatch between header and init")

    img_arr = _decode_array(doc["image"])
    spacing = tuple(doc["spacing"])
    img = ImageVolume(img_arr, spacing=spacing)
    labels = _decode_array(doc["labels"]).astype(np.int64)
    seeds = None
    if doc["seeds"] is not None:
        seeds = {
            int(k): [tuple(int(c) for c in v) for v in vs]
            for k, vs in doc["seeds"].items()
        }
    reference = None
    if doc["reference"] is not None:
        reference = _decode_array(doc["reference"]).astype(np.int64)

    session = Session(img, cfg, labels, seeds, reference, log_path=None)
    nd = len(img.dims)

    pending: Stroke | None = None
    for line in lines[2:]:
        parts = line.split()
        if not parts:
            raise MalformedLogError("blank event line")
        kind = parts[0]
        if pending is not None and kind != "impulse":
            raise MalformedLogError("stroke event without its impulse")
        if kind == "stroke":
            line_sid, stroke, t, k = _parse_stroke_line(parts, nd)
            if line_sid != session.session_id:
                raise MalformedLogError(f"foreign session id {line_sid}")
            if repr(session.state.t) != repr(t):
                raise ReplayChecksumError(
                    f"stroke time {t!r} diverges from engine time {session.state.t!r}"
                )
            if k != session._stroke_counts[stroke.label]:
                raise ReplayChecksumError(
                    f"stroke counter {k} diverges for label {stroke.label}"
                )
            pending = stroke
        elif kind == "impulse":
            if pending is None:
                raise MalformedLogError("impulse without a preceding stroke")
            session.ingest_stroke(pending)
            pending = None
        elif kind == "tick":
            if len(parts) != 1:
                raise MalformedLogError(f"malformed tick line {line!r}")
            session.tick()
        elif kind == "snapshot":
            if len(parts) != 2:
                raise MalformedLogError(f"malformed snapshot line {line!r}")
            have = session.log_snapshot()
            if have != parts[1]:
                raise ReplayChecksumError(
                    f"snapshot mismatch: log {parts[1]} vs replay {have}"
                )
        else:
            raise MalformedLogError(f"unknown event kind {kind!r}")
    if pending is not None:
        raise MalformedLogError("log ends with a stroke missing its impulse")
    session.live = False
    return session
