"""Command-line entry points.

* ``segctl-auto``   one image, no strokes: tick until settled, write results
* ``segctl-serve``  TCP service; each connection drives a live session
* ``segctl-replay`` re-execute a session log and verify its snapshots
* ``segctl-bench``  synthetic closed-loop suite, one CSV row per image

Exit codes: 0 success; 1 runtime failure; 2 usage; 3 tick cap hit
(partial outputs written); 4 replay checksum mismatch (determinism
regression); 5 config digest mismatch.

Session logs are written to ``$SEGCTL_LOG_DIR`` when that variable is set.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .control import ControlParams
from .errors import (
    ConfigDigestError,
    MalformedLogError,
    ReplayChecksumError,
    SegctlError,
)
from .formats import load_image, load_labels, save_labels
from .grid import ImageVolume
from .session import Session, SessionConfig, replay, start_session
from .synthetic import (
    benchmark_suite,
    degrade_labels,
    drive_session,
    interior_seeds,
)

TICK_CAP_DEFAULT = 600
SETTLED_TICKS = 10  # consecutive zero-reclassification ticks = converged


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mode", choices=("region", "distance"),
                        default="region", help="dynamics variant")
    parser.add_argument("--epsilon", type=float, default=1.5,
                        help="interface half-width of the smoothed step")
    parser.add_argument("--alpha-margin", type=float, default=1.0,
                        help="feedback gain margin above the image bound")
    parser.add_argument("--dmax", type=float, default=None,
                        help="stroke kernel reach (default: 10%% of diagonal)")
    parser.add_argument("--dt", type=float, default=0.1,
                        help="per-tick time cap")
    parser.add_argument("--ticks", type=int, default=TICK_CAP_DEFAULT,
                        help="tick budget")
    parser.add_argument("--seed", type=int, default=0, help="session seed")
    parser.add_argument("--reference", type=Path, default=None,
                        help="reference label map (RAWF) for Dice metrics")


def _config(args, n_labels: int, review_interval: int = 25) -> SessionConfig:
    return SessionConfig(
        dynamics=args.mode,
        n_labels=n_labels,
        params=ControlParams(alpha_margin=args.alpha_margin,
                             epsilon=args.epsilon),
        d_max=args.dmax,
        dt=args.dt,
        review_interval=review_interval,
        seed=args.seed,
    )


def _load_seeds(path: Path) -> dict:
    doc = json.loads(path.read_text(encoding="utf-8"))
    return {int(k): [tuple(int(c) for c in v) for v in vs]
            for k, vs in doc.items()}


def intensity_bin_init(img: ImageVolume, n_labels: int) -> np.ndarray:
    """Default region-mode init: equal-width intensity bins, brightest bin
    becomes label 1 and the darkest becomes the background label."""
    vals = img.values.mean(axis=-1)
    lo, hi = float(vals.min()), float(vals.max())
    if hi <= lo:
        raise SegctlError("constant image: intensity bins cannot cover "
                          f"{n_labels} labels; provide --seeds")
    edges = np.linspace(lo, hi, n_labels + 1)[1:-1]
    labels = (n_labels - np.digitize(vals, edges)).astype(np.int64)
    missing = [i for i in range(1, n_labels + 1) if not (labels == i).any()]
    if missing:
        raise SegctlError(f"intensity bins left labels {missing} empty; "
                          "provide --seeds")
    return labels


def _log_path(stem: str) -> Path | None:
    log_dir = os.environ.get("SEGCTL_LOG_DIR")
    if not log_dir:
        return None
    path = Path(log_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path / f"{stem}.seglog"


class UsageError(Exception):
    pass


def _open_session(args, img: ImageVolume, seeds: dict | None,
                  n_labels: int, stem: str) -> Session:
    reference = load_labels(args.reference) if args.reference else None
    cfg = _config(args, n_labels)
    if args.mode == "distance":
        if seeds is None:
            raise UsageError("distance mode needs --seeds (one set per label, "
                             "background included)")
        init = seeds
    else:
        init = seeds if seeds is not None else intensity_bin_init(img, n_labels)
    return start_session(img, init, cfg, reference=reference,
                         log_path=_log_path(stem))


# -------------------------------------------------------------------- auto


def main_auto(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="segctl-auto",
        description="Run the open-loop dynamics (no strokes) until the label "
                    "map settles; write the label map and the metric trace.")
    parser.add_argument("image", type=Path, help="PGM/PPM/RAWF image")
    parser.add_argument("--out", type=Path, required=True,
                        help="output label map (RAWF)")
    parser.add_argument("--trace", type=Path, default=None,
                        help="metrics CSV (default: OUT with .csv suffix)")
    parser.add_argument("--seeds", type=Path, default=None,
                        help="JSON {label: [[r, c], ...]} seed sets")
    parser.add_argument("--labels", type=int, default=2,
                        help="label count including background")
    _common_flags(parser)
    args = parser.parse_args(argv)
    trace = args.trace or args.out.with_suffix(".csv")
    try:
        img = load_image(args.image)
        seeds = _load_seeds(args.seeds) if args.seeds else None
        n_labels = max([args.labels, *(seeds or ())])
        sess = _open_session(args, img, seeds, n_labels,
                             stem=f"auto-s{args.seed}")
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"segctl-auto: error: {exc}", file=sys.stderr)
        return 2
    except (SegctlError, OSError, json.JSONDecodeError) as exc:
        print(f"segctl-auto: {exc}", file=sys.stderr)
        return 1

    settled = 0
    converged = False
    for _ in range(args.ticks):
        row = sess.tick()
        settled = settled + 1 if row.reclassified == 0 else 0
        if settled >= SETTLED_TICKS:
            converged = True
            break
    sess.close()
    save_labels(sess.state.labels, args.out)
    sess.write_lyapunov_csv(trace)
    if not converged:
        print(f"segctl-auto: tick cap {args.ticks} reached before settling; "
              "outputs are partial", file=sys.stderr)
        return 3
    return 0


# ------------------------------------------------------------------- serve


def main_serve(argv=None) -> int:
    from .server import serve_session

    parser = argparse.ArgumentParser(
        prog="segctl-serve",
        description="Serve live sessions over a line-oriented JSON protocol; "
                    "one connection owns one session.")
    parser.add_argument("image", type=Path, help="PGM/PPM/RAWF image")
    parser.add_argument("--port", type=int, default=4710)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--seeds", type=Path, default=None,
                        help="JSON {label: [[r, c], ...]} seed sets")
    parser.add_argument("--labels", type=int, default=2,
                        help="label count including background")
    parser.add_argument("--frame-ticks", type=int, default=5,
                        help="engine ticks between outbound frames")
    _common_flags(parser)
    args = parser.parse_args(argv)
    try:
        img = load_image(args.image)
        seeds = _load_seeds(args.seeds) if args.seeds else None
        n_labels = max([args.labels, *(seeds or ())])
        counter = {"n": 0}

        def factory() -> Session:
            counter["n"] += 1
            return _open_session(args, img, seeds, n_labels,
                                 stem=f"serve-s{args.seed}-{counter['n']}")

        factory().close()  # validate configuration before binding
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"segctl-serve: error: {exc}", file=sys.stderr)
        return 2
    except (SegctlError, OSError, json.JSONDecodeError) as exc:
        print(f"segctl-serve: {exc}", file=sys.stderr)
        return 1
    counter["n"] = 0
    server = serve_session(factory, host=args.host, port=args.port,
                           ticks_per_frame=args.frame_ticks)
    print(f"segctl-serve: listening on {args.host}:{server.port}",
          file=sys.stderr)
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        server.server_close()
    return 0


# ------------------------------------------------------------------ replay


def main_replay(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="segctl-replay",
        description="Re-execute a session log; verify every snapshot "
                    "checksum (exit 4 on divergence, 5 on a config-digest "
                    "mismatch).")
    parser.add_argument("log", type=Path, help=".seglog file")
    parser.add_argument("--out", type=Path, default=None,
                        help="write the replayed label map (RAWF)")
    args = parser.parse_args(argv)
    try:
        text = args.log.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"segctl-replay: {exc}", file=sys.stderr)
        return 1
    try:
        session = replay(text)
    except ReplayChecksumError as exc:
        print(f"segctl-replay: determinism regression: {exc}", file=sys.stderr)
        return 4
    except ConfigDigestError as exc:
        print(f"segctl-replay: {exc}", file=sys.stderr)
        return 5
    except (MalformedLogError, SegctlError) as exc:
        print(f"segctl-replay: {exc}", file=sys.stderr)
        return 1
    if args.out:
        save_labels(session.state.labels, args.out)
    print(f"segctl-replay: ok {session.checksum()} "
          f"({len(session.metrics.rows) - 1} ticks, "
          f"{session.metrics.impulses} impulses)")
    return 0


# ------------------------------------------------------------------- bench


def main_bench(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="segctl-bench",
        description="Closed-loop synthetic suite: a deterministic user "
                    "corrects each scene; one CSV row per image.")
    parser.add_argument("--out", type=Path, default=None,
                        help="CSV path (default: stdout)")
    parser.add_argument("--budget", type=int, default=50,
                        help="impulse budget per image")
    parser.add_argument("--brush", type=int, default=3, help="brush radius")
    parser.add_argument("--suite-seed", type=int, default=0)
    _common_flags(parser)
    args = parser.parse_args(argv)

    rows = []
    for index, case in enumerate(benchmark_suite(seed=args.suite_seed)):
        cfg = _config(args, case.n_labels)
        t0 = time.perf_counter()
        try:
            if args.mode == "distance":
                init = interior_seeds(case.reference, case.n_labels)
            else:
                rng = np.random.default_rng(args.suite_seed * 1009 + index)
                init = degrade_labels(case.reference, rng)
            sess = start_session(case.img, init, cfg,
                                 reference=case.reference,
                                 log_path=_log_path(
                                     f"bench-{case.name}-{args.mode}"))
            report = drive_session(sess, brush_radius=args.brush,
                                   max_impulses=args.budget)
            sess.close()
            rows.append([case.name, args.mode, report["actuated"],
                         report["impulses"], f"{report['min_dice']:.4f}",
                         report["ticks"],
                         f"{time.perf_counter() - t0:.3f}"])
        except SegctlError as exc:
            print(f"segctl-bench: {case.name}: {exc}", file=sys.stderr)
            rows.append([case.name, args.mode, "", "", "nan", "",
                         f"{time.perf_counter() - t0:.3f}"])

    out = open(args.out, "w", newline="", encoding="utf-8") if args.out \
        else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(["image", "mode", "actuated", "impulses", "dice",
                         "ticks", "wall_time"])
        writer.writerows(rows)
    finally:
        if args.out:
            out.close()
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main_auto())
