"""Per-camera processing chain (gate -> track -> distance) and the fused per-frame pipeline."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .core import CameraId, Category, FrameBundle, Mask
from .distance import pair_distance
from .maskproc import GateConfig, GateState, GateStatus, ScenePrior, check_geometry, temporal_gate
from .monitor import Monitor, MonitorConfig, WarningEvent
from .sim import category_pairs
from .tracking import Tracker, track_step

STAGES = ("gate", "track", "distance")


@dataclass
class CameraResult:
    camera: str
    frame_index: int
    statuses: dict[Category, GateStatus]
    masks: dict[Category, Mask]
    track_ids: dict[Category, int]
    distances: dict[tuple[Category, Category], float | None]
    timings: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class CameraSetup:
    camera: CameraId
    categories: frozenset[Category]  # categories this view can see


class CameraPipeline:
    """Sequential state for one camera stream."""

    def __init__(self, setup: CameraSetup, pairs, prior: ScenePrior, gate: GateConfig,
                 window: int = 3, match_threshold: float = 0.3, max_missed: int = 10,
                 stride: int | None = None):
        self.setup = setup
        self.pairs = pairs
        self.prior = prior
        self.gate_cfg = gate
        self.stride = stride
        self.gates = {c: GateState() for c in sorted(setup.categories)}
        self.tracker = Tracker(setup.camera, window, match_threshold, max_missed)

    def process(self, bundle: FrameBundle) -> CameraResult:
        t0 = time.perf_counter()
        bad = check_geometry(bundle, self.prior).violating_categories()
        statuses, gated = {}, {}
        for cat, state in self.gates.items():
            mask, status = temporal_gate(bundle.get(cat), state, self.gate_cfg, cat not in bad)
            statuses[cat] = status
            # lost categories count as not visible in this view
            if status is not GateStatus.LOST and mask is not None and not mask.is_empty:
                gated[cat] = mask
        t1 = time.perf_counter()
        tracked, ids = track_step(self.tracker, FrameBundle(bundle.camera, bundle.frame_index, bundle.fps, gated))
        t2 = time.perf_counter()
        cache: dict = {}
        distances = {}
        for a, b in self.pairs:
            out = pair_distance(tracked.get(a), tracked.get(b), self.stride, contours=cache, key_a=a, key_b=b)
            distances[(a, b)] = None if out is None else out[0]
        t3 = time.perf_counter()
        return CameraResult(self.setup.camera.name, bundle.frame_index, statuses, dict(tracked.masks), ids,
                            distances, {"gate": t1 - t0, "track": t2 - t1, "distance": t3 - t2})


class Pipeline:
    """Runs every camera of every replica for one frame, then fuses at a per-frame barrier.

    Results are gathered in camera order, so the output does not depend on
    ``threads``.
    """

    def __init__(self, setups: list[CameraSetup], categories, prior: ScenePrior, gate: GateConfig,
                 monitor: MonitorConfig, window: int = 3, match_threshold: float = 0.3,
                 max_missed: int = 10, stride: int | None = None, threads: int = 1):
        self.setups = setups
        self.pairs = category_pairs(categories)
        self.replicas = [
            [CameraPipeline(s, self.pairs, prior, gate, window, match_threshold, max_missed, stride) for s in setups]
            for _ in range(monitor.replicas_r)
        ]
        self.monitor = Monitor(monitor)
        self.threads = threads
        self._pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None

    @classmethod
    def from_config(cls, cfg, *, stride: int | None = ..., window: int | None = None, threads: int = 1) -> Pipeline:
        setups = [CameraSetup(c.id, frozenset(c.visible_categories)) for c in cfg.cameras]
        return cls(setups, cfg.categories, cfg.prior, cfg.gate, cfg.monitor,
                   window=window or cfg.tracking.window,
                   match_threshold=cfg.tracking.match_threshold,
                   max_missed=cfg.tracking.max_missed,
                   stride=cfg.stride if stride is ... else stride,
                   threads=threads)

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def process_frame(self, frame_index: int, bundles: list[dict[str, FrameBundle]]
                      ) -> tuple[list[WarningEvent], list[list[CameraResult]]]:
        """``bundles[r][camera name]`` for each replica ``r``."""
        jobs = [(cp, bundles[r][cp.setup.camera.name])
                for r, cams in enumerate(self.replicas) for cp in cams]
        if self._pool is None:
            flat = [cp.process(b) for cp, b in jobs]
        else:
            flat = list(self._pool.map(lambda job: job[0].process(job[1]), jobs))
        n = len(self.setups)
        results = [flat[r * n:(r + 1) * n] for r in range(len(self.replicas))]
        per_replica = []
        for rep in results:
            table = {pair: {res.camera: res.distances[pair] for res in rep} for pair in self.pairs}
            per_replica.append(table)
        events = self.monitor.step(frame_index, per_replica)
        return events, results
