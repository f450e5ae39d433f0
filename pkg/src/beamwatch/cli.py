"""Command-line entry point: ``beamwatch <subcommand> ...``.

Exit codes: 0 ok / no warning, 2 usage or config error, 3 confirmed
collision warning, 4 stream-gap or data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import warnings
from pathlib import Path

from . import commands
from .commands import EXIT_DATA, EXIT_OK, EXIT_USAGE, EXIT_WARNING
from .config import with_overrides
from .errors import AlignmentError, BeamwatchError, ConfigError, ParameterError, StreamGapError
from .metrics import DEFAULT_SUBSETS, format_accuracy_table, format_distance_table, format_iou_table

log = logging.getLogger("beamwatch")


def _stride(value: str):
    if value == "auto":
        return None
    try:
        s = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("stride must be 'auto' or a positive integer")
    if s < 1:
        raise argparse.ArgumentTypeError("stride must be >= 1")
    return s


def _load(args):
    cfg = commands.resolve_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = with_overrides(cfg, seed=args.seed)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="beamwatch", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="render a scenario to a mask stream plus ground truth")
    s.add_argument("--config", required=True, help="YAML path or builtin:<name>")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)

    m = sub.add_parser("monitor", help="run the monitoring pipeline and write the event log")
    src = m.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="scenario to simulate on the fly")
    src.add_argument("--input", help="recorded mask-stream directory")
    m.add_argument("--settings", help="config supplying pipeline settings when using --input")
    m.add_argument("--out", required=True)
    m.add_argument("--seed", type=int)
    m.add_argument("--stride", type=_stride, default=...)
    m.add_argument("--delta", type=float)
    m.add_argument("--k", type=int)
    m.add_argument("--replicas", type=int)
    m.add_argument("--window", type=int)
    m.add_argument("--threads", type=int, default=1)
    m.add_argument("--save-masks", action="store_true", help="also write tracked masks for IoU evaluation")

    c = sub.add_parser("calibrate", help="collision threshold from a distance-error report")
    c.add_argument("report")

    mt = sub.add_parser("metrics", help="IoU, distance-error and accuracy reports for a run")
    mt.add_argument("--run", required=True)
    mt.add_argument("--gt")
    mt.add_argument("--views", default=",".join(DEFAULT_SUBSETS),
                    help="comma-separated view subsets, e.g. f,s,t,f+s+t")
    mt.add_argument("--delta", type=float)
    mt.add_argument("--out")

    r = sub.add_parser("reliability", help="combined error probability and mean time between errors")
    r.add_argument("p", type=float)
    r.add_argument("r", type=int)
    r.add_argument("k", type=int)
    r.add_argument("fps", type=float)

    b = sub.add_parser("bench", help="end-to-end pipeline throughput")
    b.add_argument("--config", default="builtin:bench_fullres")
    b.add_argument("--frames", type=int)
    b.add_argument("--stride", type=_stride, default=...)
    b.add_argument("--threads", type=int, default=1)
    b.add_argument("--seed", type=int)
    b.add_argument("--compare-stride", action="store_true", help="also run with stride 1")
    b.add_argument("--out")

    sub.add_parser("scenarios", help="list builtin scenarios")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StreamGapError, AlignmentError, commands.NoDataError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (BeamwatchError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def _dispatch(args) -> int:
    if args.command == "simulate":
        n = commands.cmd_simulate(_load(args), args.out)
        print(f"{n} frames written to {args.out}")
        return EXIT_OK

    if args.command == "monitor":
        if args.config:
            source, settings = _load(args), None
        else:
            source = args.input
            settings = commands.resolve_config(args.settings) if args.settings else None
        summary = commands.cmd_monitor(
            source, args.out, config=settings, threads=args.threads, stride=args.stride,
            delta=args.delta, k=args.k, replicas=args.replicas, window=args.window,
            save_masks=args.save_masks)
        print(f"{summary.frames} frames, {summary.raw_warnings} raw / "
              f"{summary.confirmed_warnings} confirmed warnings")
        return summary.exit_code

    if args.command == "calibrate":
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            delta, mae, std = commands.cmd_calibrate(args.report)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        log.info("worst cell MAE %.2f STD %.2f", mae, std)
        print(delta)
        return EXIT_OK

    if args.command == "metrics":
        from .monitor import MonitorConfig
        mon = MonitorConfig(delta_px=args.delta) if args.delta else None
        subsets = [v for v in args.views.split(",") if v]
        res = commands.cmd_metrics(args.run, args.gt, subsets, args.out, mon)
        if res.iou is not None:
            print(format_iou_table(res.iou))
            print()
        print(format_distance_table(res.distance))
        print()
        print(format_accuracy_table(res.accuracy))
        return EXIT_OK

    if args.command == "reliability":
        out = commands.cmd_reliability(args.p, args.r, args.k, args.fps)
        years = out["mtbf_years"]
        print(f"p_combined   {out['p_combined']:.4g}")
        if math.isinf(years):
            print("mtbf         infinite")
        else:
            print(f"mtbf_seconds {out['mtbf_seconds']:.6g}")
            print(f"mtbf_years   {years:.2f}")
        return EXIT_OK

    if args.command == "bench":
        cfg = _load(args)
        report = commands.cmd_bench(cfg, args.frames, args.stride, args.threads)
        doc = {"default": report.to_json()}
        _print_bench(report)
        if args.compare_stride:
            exact = commands.cmd_bench(cfg, args.frames, 1, args.threads)
            doc["stride_1"] = exact.to_json()
            _print_bench(exact)
        if args.out:
            Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return EXIT_OK

    if args.command == "scenarios":
        for name in commands.builtin_scenarios():
            print(f"builtin:{name}")
        return EXIT_OK
    return EXIT_USAGE


def _print_bench(r) -> None:
    w, h = r.resolution
    print(f"{r.frames} frames  {r.cameras} views  {r.categories} categories  {w}x{h}  stride={r.stride}")
    print(f"  throughput   {r.fps:.1f} FPS")
    print(f"  latency      mean {r.mean_latency_ms:.1f} ms  p95 {r.p95_latency_ms:.1f} ms")
    stages = "  ".join(f"{k} {v:.1f}" for k, v in r.stage_ms_per_frame.items())
    print(f"  stages (ms)  {stages}")
    print(f"  render       {r.render_ms_per_frame:.1f} ms/frame (excluded)")


if __name__ == "__main__":
    sys.exit(main())
