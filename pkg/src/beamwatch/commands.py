"""Library form of every CLI subcommand. Each returns plain data; cli.py handles printing and exit codes."""

from __future__ import annotations

import json
import shutil
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import streams
from .config import ScenarioConfig, load_config, parse_config
from .core import FrameBundle
from .engine import CameraSetup, Pipeline
from .errors import BeamwatchError, ConfigError
from .maskproc import GateConfig, ScenePrior
from .metrics import (DEFAULT_SUBSETS, accuracy_report, distance_error_report, format_accuracy_table,
                      format_distance_table, format_iou_table, iou_report)
from .monitor import MonitorConfig, ReliabilityModel, calibrate_threshold, combined_error, mean_time_between_errors
from .sim import simulate

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_WARNING = 3
EXIT_DATA = 4

BUILTIN_PREFIX = "builtin:"
SCENARIO_DIR = Path(__file__).parent / "scenarios"


class NoDataError(BeamwatchError):
    pass


def builtin_scenarios() -> list[str]:
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.yaml"))


def resolve_config(spec: str | Path | ScenarioConfig) -> ScenarioConfig:
    """Accept a config object, a YAML path or ``builtin:<name>``."""
    if isinstance(spec, ScenarioConfig):
        return spec
    spec = str(spec)
    if spec.startswith(BUILTIN_PREFIX):
        name = spec[len(BUILTIN_PREFIX):]
        path = SCENARIO_DIR / f"{name}.yaml"
        if not path.exists():
            raise ConfigError("<config>", f"unknown builtin scenario {name!r}; have {builtin_scenarios()}")
        return load_config(path)
    if not Path(spec).exists():
        raise ConfigError("<config>", f"file not found: {spec}")
    return load_config(spec)


# -- simulate -----------------------------------------------------------------

def cmd_simulate(config, out: str | Path) -> int:
    """Write the observed mask stream and ground truth; returns the frame count."""
    cfg = resolve_config(config)
    out = Path(out)
    mask_root = out / streams.MASK_DIR
    if mask_root.exists():
        shutil.rmtree(mask_root)
    mask_root.mkdir(parents=True)
    n = 0
    with open(out / streams.GT_FILE, "w") as gt_fh:
        for bundles, gt in simulate(cfg):
            for cam in cfg.cameras:
                streams.write_bundle(mask_root, bundles[cam.name])
            gt_fh.write(streams.dumps(streams.gt_record(gt)) + "\n")
            n += 1
    streams.write_manifest(out, cfg, n)
    return n


# -- monitor ------------------------------------------------------------------

@dataclass
class MonitorSummary:
    frames: int = 0
    events: int = 0
    raw_warnings: int = 0
    confirmed_warnings: int = 0
    unknown: int = 0
    gate_status: dict[str, int] = field(default_factory=dict)
    exit_code: int = EXIT_OK

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def cmd_monitor(source, out: str | Path, *, config=None, threads: int = 1, stride: int | None = ...,
                delta: float | None = None, k: int | None = None, replicas: int | None = None,
                window: int | None = None, save_masks: bool = False) -> MonitorSummary:
    """Run gate -> track -> distance -> fuse over a scenario or a mask-stream directory.

    ``source`` is a config spec (simulated on the fly) or a directory holding
    ``manifest.json`` and ``masks/``. With a directory, ``config`` optionally
    supplies prior, gate, tracking and monitor settings.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    from_stream = False
    if not isinstance(source, ScenarioConfig):
        source_path = Path(str(source))
        from_stream = source_path.is_dir() and (source_path / streams.MANIFEST).exists()

    if from_stream:
        manifest = streams.read_manifest(source_path)
        cfg = resolve_config(config) if config is not None else None
        mon = _monitor_cfg(cfg.monitor if cfg else MonitorConfig(), delta, k, replicas)
        if mon.replicas_r != 1:
            raise ConfigError("monitor.replicas_r", "a recorded mask stream holds a single replica")
        setups = [CameraSetup(c, manifest.visible[c.name]) for c in manifest.cameras]
        categories = manifest.categories
        pipeline = Pipeline(
            setups, categories,
            prior=cfg.prior if cfg else ScenePrior(),
            gate=cfg.gate if cfg else GateConfig(),
            monitor=mon,
            window=window or (cfg.tracking.window if cfg else 3),
            match_threshold=cfg.tracking.match_threshold if cfg else 0.3,
            max_missed=cfg.tracking.max_missed if cfg else 10,
            stride=(cfg.stride if cfg else None) if stride is ... else stride,
            threads=threads,
        )
        frames = ((f, [b]) for f, b in streams.iter_mask_stream(source_path))
        if source_path.resolve() != out.resolve():
            shutil.copyfile(source_path / streams.MANIFEST, out / streams.MANIFEST)
    else:
        cfg = resolve_config(source)
        mon = _monitor_cfg(cfg.monitor, delta, k, replicas)
        cfg = parse_config({**cfg.raw, "monitor": {**cfg.raw.get("monitor", {}), **_mon_raw(mon)}})
        pipeline = Pipeline.from_config(cfg, stride=stride, window=window, threads=threads)
        gens = [simulate(cfg, replica=r) for r in range(mon.replicas_r)]
        frames = ((i, [next(g)[0] for g in gens]) for i in range(cfg.n_frames))
        streams.write_manifest(out, cfg, cfg.n_frames)

    summary = MonitorSummary()
    tracked_root = out / streams.TRACKED_DIR
    if save_masks and tracked_root.exists():
        shutil.rmtree(tracked_root)
    with pipeline, open(out / streams.EVENTS_FILE, "w") as ev_fh:
        for frame_index, bundles in frames:
            events, results = pipeline.process_frame(frame_index, bundles)
            summary.frames += 1
            for ev in events:
                ev_fh.write(streams.dumps(streams.event_record(ev)) + "\n")
                summary.events += 1
                summary.raw_warnings += ev.raw
                summary.confirmed_warnings += ev.confirmed
                summary.unknown += ev.status == "unknown"
            for res in results[0]:
                for st in res.statuses.values():
                    summary.gate_status[st.value] = summary.gate_status.get(st.value, 0) + 1
                if save_masks:
                    cam = next(s.camera for s in pipeline.setups if s.camera.name == res.camera)
                    streams.write_bundle(tracked_root, FrameBundle(cam, frame_index, 1.0, res.masks))
    summary.gate_status = {k: summary.gate_status[k] for k in sorted(summary.gate_status)}
    summary.exit_code = EXIT_WARNING if summary.confirmed_warnings else EXIT_OK
    (out / "monitor_summary.json").write_text(json.dumps(summary.to_json(), sort_keys=True, indent=2) + "\n")
    return summary


def _monitor_cfg(base: MonitorConfig, delta, k, replicas) -> MonitorConfig:
    return MonitorConfig(
        delta_px=base.delta_px if delta is None else delta,
        consecutive_k=base.consecutive_k if k is None else k,
        replicas_r=base.replicas_r if replicas is None else replicas,
        absent_view_policy=base.absent_view_policy,
    )


def _mon_raw(m: MonitorConfig) -> dict:
    return {"delta_px": m.delta_px, "consecutive_k": m.consecutive_k,
            "replicas_r": m.replicas_r, "absent_view_policy": m.absent_view_policy}


# -- calibrate ----------------------------------------------------------------

def cmd_calibrate(report_path: str | Path) -> tuple[int, float, float]:
    """Threshold from the worst MAE cell of a distance-error report: ``(delta, mae, std)``."""
    doc = json.loads(Path(report_path).read_text())
    cells = []
    for row in doc.values():
        if not isinstance(row, dict):
            continue
        for cell in row.values():
            if cell is not None:
                cells.append((float(cell["mae"]), float(cell["std"])))
    if not cells:
        raise NoDataError(f"{report_path}: no defined distance-error cells")
    mae, std = max(cells)
    return calibrate_threshold(mae, std), mae, std


# -- metrics ------------------------------------------------------------------

@dataclass
class MetricsResult:
    iou: object
    distance: object
    accuracy: object


def cmd_metrics(run_dir: str | Path, gt_path: str | Path | None = None, subsets=DEFAULT_SUBSETS,
                out: str | Path | None = None, monitor: MonitorConfig | None = None) -> MetricsResult:
    run_dir = Path(run_dir)
    out = Path(out) if out else run_dir
    out.mkdir(parents=True, exist_ok=True)
    manifest = streams.read_manifest(run_dir)
    gt_path = Path(gt_path) if gt_path else run_dir / streams.GT_FILE
    gt_frames = streams.read_ground_truth(gt_path, manifest.categories)
    if len(gt_frames) != manifest.frame_count:
        raise BeamwatchError(f"ground truth has {len(gt_frames)} frames, manifest says {manifest.frame_count}")

    # IoU: tracked masks when the monitor saved them, else the observed stream.
    sub = streams.TRACKED_DIR if (run_dir / streams.TRACKED_DIR).is_dir() else streams.MASK_DIR
    iou = None
    if (run_dir / sub).is_dir():
        pred, truth = [], []
        for f, bundles in streams.iter_mask_stream(run_dir, sub):
            g = gt_frames[f]
            for cam in manifest.cameras:
                pred.append((f, cam.name, dict(bundles[cam.name].masks)))
                truth.append((f, cam.name, {c: g.mask(cam, c) for c in g.rects.get(cam.name, {})}))
        iou = iou_report(pred, truth)

    events = streams.read_events(run_dir / streams.EVENTS_FILE)
    by_label = {}
    for g in gt_frames:
        for pair in g.gt_warning:
            by_label[streams.pair_label(pair)] = pair
    measured, units = [], []
    for ev in events:
        pair = by_label[ev["pair"]]
        measured.append((ev["frame_index"], pair, ev["distances"]))
        g = gt_frames[ev["frame_index"]]
        if pair in g.distances:  # skip pairs no view can see
            units.append((ev["frame_index"], pair, ev["distances"], g.gt_warning[pair]))
    dist = distance_error_report(measured, gt_frames)
    acc = accuracy_report(units, subsets, manifest.views, monitor)

    views = manifest.views
    if iou is not None:
        (out / "iou_report.json").write_text(_json(iou.to_json()))
        (out / "iou_report.txt").write_text(format_iou_table(iou, manifest.categories, views) + "\n")
    (out / "distance_error.json").write_text(_json(dist.to_json()))
    (out / "distance_error.txt").write_text(format_distance_table(dist, views) + "\n")
    (out / "accuracy.json").write_text(_json(acc.to_json()))
    (out / "accuracy.txt").write_text(format_accuracy_table(acc) + "\n")
    return MetricsResult(iou, dist, acc)


def _json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


# -- reliability --------------------------------------------------------------

def cmd_reliability(p: float, r: int, k: int, fps: float) -> dict:
    model = ReliabilityModel(p, r, k, fps)
    seconds, years = mean_time_between_errors(model)
    return {"p_combined": combined_error(model), "mtbf_seconds": seconds, "mtbf_years": years}


# -- bench --------------------------------------------------------------------

@dataclass
class BenchReport:
    frames: int
    cameras: int
    categories: int
    resolution: tuple[int, int]
    stride: str
    fps: float
    mean_latency_ms: float
    p95_latency_ms: float
    render_ms_per_frame: float
    stage_ms_per_frame: dict[str, float]

    def to_json(self) -> dict:
        d = dict(self.__dict__)
        d["resolution"] = list(self.resolution)
        return d


def cmd_bench(config, frames: int | None = None, stride: int | None = ..., threads: int = 1,
              warmup: int = 3) -> BenchReport:
    """End-to-end pipeline throughput; rendering is timed separately and excluded."""
    cfg = resolve_config(config)
    n = min(frames or cfg.n_frames, cfg.n_frames - warmup)
    stride_used = cfg.stride if stride is ... else stride
    latencies, render, stages = [], 0.0, {"gate": 0.0, "track": 0.0, "distance": 0.0}
    gen = simulate(cfg)
    with Pipeline.from_config(cfg, stride=stride_used, threads=threads) as pipe:
        for i in range(n + warmup):
            t0 = time.perf_counter()
            bundles, _ = next(gen)
            t1 = time.perf_counter()
            _, results = pipe.process_frame(i, [bundles])
            t2 = time.perf_counter()
            if i < warmup:
                continue
            render += t1 - t0
            latencies.append(t2 - t1)
            for res in results[0]:
                for name, v in res.timings.items():
                    stages[name] += v
    lat = np.asarray(latencies)
    return BenchReport(
        frames=n, cameras=len(cfg.cameras), categories=len(cfg.categories),
        resolution=cfg.cameras[0].resolution,
        stride="auto" if stride_used is None else str(stride_used),
        fps=float(n / lat.sum()),
        mean_latency_ms=float(lat.mean() * 1e3),
        p95_latency_ms=float(np.percentile(lat, 95) * 1e3),
        render_ms_per_frame=render / n * 1e3,
        stage_ms_per_frame={k: v / n * 1e3 for k, v in stages.items()},
    )
