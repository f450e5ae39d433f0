"""Deterministic synthetic workcell: moving boxes, orthographic views, analytic ground truth."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .core import CameraId, Category, FrameBundle, Mask
from .errors import ParameterError

VIEWS = ("front", "side", "top")
_EPS = 1e-9


class Rect(NamedTuple):
    """Inclusive pixel bounds."""

    row_min: int
    row_max: int
    col_min: int
    col_max: int

    def clip(self, resolution: tuple[int, int]) -> Rect | None:
        w, h = resolution
        r = Rect(max(self.row_min, 0), min(self.row_max, h - 1),
                 max(self.col_min, 0), min(self.col_max, w - 1))
        if r.row_min > r.row_max or r.col_min > r.col_max:
            return None
        return r


@dataclass(frozen=True)
class WorldBox:
    category: Category
    center: tuple[float, float, float]
    half_extents: tuple[float, float, float]

    def __post_init__(self):
        if len(self.half_extents) != 3 or min(self.half_extents) <= 0:
            raise ParameterError("half_extents must be three positive numbers")

    def moved_to(self, center) -> WorldBox:
        return WorldBox(self.category, tuple(float(v) for v in center), self.half_extents)


@dataclass(frozen=True)
class Trajectory:
    waypoints: tuple[tuple[float, tuple[float, float, float]], ...]

    def __post_init__(self):
        if not self.waypoints:
            raise ParameterError("trajectory needs at least one waypoint")
        times = [t for t, _ in self.waypoints]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ParameterError("waypoint times must be strictly increasing")

    @classmethod
    def static(cls, center) -> Trajectory:
        return cls(((0.0, tuple(center)),))

    def position(self, t: float) -> tuple[float, float, float]:
        wps = self.waypoints
        if t <= wps[0][0]:
            return tuple(wps[0][1])
        for (t0, p0), (t1, p1) in zip(wps, wps[1:]):
            if t <= t1:
                a = (t - t0) / (t1 - t0)
                return tuple(p0[k] + a * (p1[k] - p0[k]) for k in range(3))
        return tuple(wps[-1][1])


@dataclass(frozen=True)
class NoiseSpec:
    jitter_sigma_px: float = 0.0
    dropout_prob: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.jitter_sigma_px < 0:
            raise ParameterError("jitter_sigma_px must be >= 0")
        if not 0.0 <= self.dropout_prob <= 1.0:
            raise ParameterError("dropout_prob must lie in [0, 1]")


@dataclass(frozen=True)
class CameraSpec:
    id: CameraId
    view: str
    scale: float
    origin_offset: tuple[float, float]  # (u0 -> columns, v0 -> rows)
    visible_categories: frozenset[Category]
    noise: NoiseSpec | None = None  # per-view override of the scenario noise level

    def __post_init__(self):
        if self.view not in VIEWS:
            raise ParameterError(f"unknown view {self.view!r}")
        if self.scale <= 0:
            raise ParameterError("scale must be > 0")

    @property
    def name(self) -> str:
        return self.id.name

    @property
    def resolution(self) -> tuple[int, int]:
        return self.id.resolution


def project_box(b: WorldBox, cam: CameraSpec) -> Rect | None:
    """Silhouette of ``b`` in ``cam`` rounded outward; None when entirely off-image."""
    (x, y, z), (hx, hy, hz) = b.center, b.half_extents
    s, (u0, v0) = cam.scale, cam.origin_offset
    if cam.view == "front":
        cols = (u0 + s * (x - hx), u0 + s * (x + hx))
        rows = (v0 - s * (z + hz), v0 - s * (z - hz))
    elif cam.view == "side":
        cols = (u0 + s * (y - hy), u0 + s * (y + hy))
        rows = (v0 - s * (z + hz), v0 - s * (z - hz))
    else:
        cols = (u0 + s * (x - hx), u0 + s * (x + hx))
        rows = (v0 + s * (y - hy), v0 + s * (y + hy))
    rect = Rect(math.floor(rows[0] + _EPS), math.ceil(rows[1] - _EPS),
                math.floor(cols[0] + _EPS), math.ceil(cols[1] - _EPS))
    if rect.clip(cam.resolution) is None:
        return None
    return rect


def rasterize_rect(rect: Rect | None, resolution: tuple[int, int]) -> Mask:
    if rect is None:
        return Mask.empty(resolution)
    return Mask.from_rect(resolution, *rect)


def _interval_gap(a0: float, a1: float, b0: float, b1: float) -> float:
    return max(0.0, b0 - a1, a0 - b1)


def exact_rect_distance_px(r1: Rect, r2: Rect) -> float:
    """Closest pixel-centre distance between two filled rectangles."""
    gr = _interval_gap(r1.row_min, r1.row_max, r2.row_min, r2.row_max)
    gc = _interval_gap(r1.col_min, r1.col_max, r2.col_min, r2.col_max)
    return math.hypot(gr, gc)


def world_gap(b1: WorldBox, b2: WorldBox) -> float:
    total = 0.0
    for c1, c2, h1, h2 in zip(b1.center, b2.center, b1.half_extents, b2.half_extents):
        total += max(0.0, abs(c1 - c2) - (h1 + h2)) ** 2
    return math.sqrt(total)


def apply_noise(m: Mask, noise: NoiseSpec, rng: np.random.Generator) -> Mask:
    """Dropout or integer translation of ``m``.

    Always consumes one uniform and two normal draws so the stream position
    does not depend on the outcome.
    """
    u = rng.random()
    dr, dc = rng.normal(0.0, 1.0, size=2) * noise.jitter_sigma_px
    if u < noise.dropout_prob:
        return Mask.empty(m.resolution)
    dr, dc = int(np.rint(dr)), int(np.rint(dc))
    if dr == 0 and dc == 0:
        return m
    return m.translate(dr, dc)


@dataclass
class GroundTruthFrame:
    frame_index: int
    rects: dict[str, dict[Category, Rect]] = field(default_factory=dict)
    distances: dict[tuple[Category, Category], dict[str, float | None]] = field(default_factory=dict)
    world_gap: dict[tuple[Category, Category], float] = field(default_factory=dict)
    gt_warning: dict[tuple[Category, Category], bool] = field(default_factory=dict)

    def mask(self, camera: CameraSpec | CameraId, cat: Category) -> Mask | None:
        rect = self.rects.get(camera.name, {}).get(cat)
        if rect is None:
            return None
        return rasterize_rect(rect, camera.resolution)


def category_pairs(categories) -> list[tuple[Category, Category]]:
    cats = sorted(categories, key=lambda c: c.id)
    return list(itertools.combinations(cats, 2))


def all_view_rule(distances, delta: float) -> bool:
    """True iff every defined distance is within ``delta`` (False when none is defined)."""
    defined = [d for d in distances if d is not None]
    return bool(defined) and all(d <= delta for d in defined)


def replica_seed(seed: int, replica: int) -> int:
    if replica == 0:
        return seed
    return int(np.random.SeedSequence([seed, replica]).generate_state(1, dtype=np.uint64)[0])


def simulate(config, replica: int = 0) -> Iterator[tuple[dict[str, FrameBundle], GroundTruthFrame]]:
    """Yield ``(bundles by camera name, ground truth)`` for every frame.

    Noise draws follow the fixed (camera, category) order of the config, so
    the output depends only on the config and ``replica``.
    """
    rng = np.random.default_rng(replica_seed(config.noise.seed, replica))
    n_frames = config.n_frames
    pairs = category_pairs(config.categories)
    delta = config.monitor.delta_px
    cat_order = sorted(config.categories, key=lambda c: c.id)
    for f in range(n_frames):
        t = f / config.fps
        boxes = {box.category: box.moved_to(traj.position(t)) for box, traj in config.objects}
        gt = GroundTruthFrame(frame_index=f)
        bundles = {}
        for cam in config.cameras:
            noise = cam.noise or config.noise
            rects: dict[Category, Rect] = {}
            masks: dict[Category, Mask] = {}
            for cat in cat_order:
                if cat not in cam.visible_categories or cat not in boxes:
                    continue
                rect = project_box(boxes[cat], cam)
                clipped = rect.clip(cam.resolution) if rect is not None else None
                clean = rasterize_rect(clipped, cam.resolution)
                observed = apply_noise(clean, noise, rng)
                if clipped is None:
                    continue
                rects[cat] = clipped
                masks[cat] = observed
            gt.rects[cam.name] = rects
            bundles[cam.name] = FrameBundle(cam.id, f, config.fps, masks)
        for a, b in pairs:
            per_view = {}
            for cam in config.cameras:
                ra, rb = gt.rects[cam.name].get(a), gt.rects[cam.name].get(b)
                per_view[cam.name] = None if ra is None or rb is None else exact_rect_distance_px(ra, rb)
            if any(d is not None for d in per_view.values()):
                gt.distances[(a, b)] = per_view
            if a in boxes and b in boxes:
                gt.world_gap[(a, b)] = world_gap(boxes[a], boxes[b])
            gt.gt_warning[(a, b)] = all_view_rule(per_view.values(), delta)
        yield bundles, gt
