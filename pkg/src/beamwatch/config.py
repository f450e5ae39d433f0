"""Scenario configuration: YAML loading and strict, path-reporting validation."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .core import CameraId, Category
from .errors import ConfigError, ParameterError
from .maskproc import GateConfig, PriorEntry, ScenePrior, SpatialRelation
from .monitor import MonitorConfig
from .sim import VIEWS, CameraSpec, NoiseSpec, Trajectory, WorldBox


@dataclass(frozen=True)
class TrackingConfig:
    window: int = 3
    match_threshold: float = 0.3
    max_missed: int = 10


@dataclass
class ScenarioConfig:
    name: str
    fps: float
    duration_s: float
    categories: list[Category]
    cameras: list[CameraSpec]
    objects: list[tuple[WorldBox, Trajectory]]
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    prior: ScenePrior = field(default_factory=ScenePrior)
    gate: GateConfig = field(default_factory=GateConfig)
    tracking: TrackingConfig = field(default_factory=TrackingConfig)
    monitor: MonitorConfig = field(default_factory=MonitorConfig)
    stride: int | None = None  # None = per-contour automatic stride
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def n_frames(self) -> int:
        return max(0, math.ceil(self.duration_s * self.fps - 1e-9))

    def category(self, name: str) -> Category:
        for c in self.categories:
            if c.name == name:
                return c
        raise KeyError(name)

    def camera(self, name: str) -> CameraSpec:
        for c in self.cameras:
            if c.name == name:
                return c
        raise KeyError(name)

    def config_hash(self) -> str:
        return config_hash(self.raw)


def config_hash(raw: dict) -> str:
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


_TOP_KEYS = {"name", "fps", "duration_s", "categories", "cameras", "objects", "noise",
             "prior", "gate", "tracking", "monitor", "stride"}


class _Section:
    """Dict view that tracks its path and rejects unknown keys."""

    def __init__(self, data: Any, path: str, allowed: set[str]):
        if not isinstance(data, dict):
            raise ConfigError(path or "<root>", "expected a mapping")
        for key in data:
            if key not in allowed:
                raise ConfigError(_join(path, str(key)), "unknown key")
        self.data = data
        self.path = path

    def at(self, key: str) -> str:
        return _join(self.path, key)

    def get(self, key: str, kind, default=..., check=None):
        if key not in self.data:
            if default is ...:
                raise ConfigError(self.at(key), "required field missing")
            return default
        value = self.data[key]
        path = self.at(key)
        value = _coerce(value, kind, path)
        if check is not None:
            ok, msg = check(value)
            if not ok:
                raise ConfigError(path, msg)
        return value


def _join(path: str, key) -> str:
    if isinstance(key, int):
        return f"{path}[{key}]"
    return f"{path}.{key}" if path else key


def _coerce(value, kind, path):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str) or not value:
            raise ConfigError(path, f"expected a non-empty string, got {value!r}")
        return value
    if kind is list:
        if not isinstance(value, list):
            raise ConfigError(path, "expected a list")
        return value
    if kind is dict:
        if not isinstance(value, dict):
            raise ConfigError(path, "expected a mapping")
        return value
    if isinstance(kind, tuple):  # fixed-length numeric vector
        n = len(kind)
        if not isinstance(value, list) or len(value) != n:
            raise ConfigError(path, f"expected a list of {n} numbers")
        return tuple(_coerce(v, kind[i], _join(path, i)) for i, v in enumerate(value))
    return value


def _positive(v):
    return v > 0, "must be > 0"


def _nonneg(v):
    return v >= 0, "must be >= 0"


def _unit(v):
    return 0.0 <= v <= 1.0, "must lie in [0, 1]"


def parse_config(raw: dict) -> ScenarioConfig:
    top = _Section(raw, "", _TOP_KEYS)
    name = top.get("name", str)
    fps = top.get("fps", float, check=_positive)
    duration = top.get("duration_s", float, check=_positive)

    categories: list[Category] = []
    for i, item in enumerate(top.get("categories", list)):
        sec = _Section(item, _join("categories", i), {"id", "name"})
        cid = sec.get("id", int, check=_nonneg)
        cname = sec.get("name", str)
        if any(c.id == cid for c in categories):
            raise ConfigError(sec.at("id"), f"duplicate category id {cid}")
        if any(c.name == cname for c in categories):
            raise ConfigError(sec.at("name"), f"duplicate category name {cname!r}")
        categories.append(Category(cid, cname))
    if not categories:
        raise ConfigError("categories", "at least one category is required")
    by_name = {c.name: c for c in categories}

    def lookup(cat_name, path):
        if not isinstance(cat_name, str) or cat_name not in by_name:
            raise ConfigError(path, f"undeclared category {cat_name!r}")
        return by_name[cat_name]

    base_noise = _parse_noise(raw.get("noise", {}), "noise", with_seed=True)

    cameras: list[CameraSpec] = []
    for i, item in enumerate(top.get("cameras", list)):
        sec = _Section(item, _join("cameras", i),
                       {"name", "view", "resolution", "scale", "origin_offset", "visible_categories", "noise"})
        cname = sec.get("name", str)
        if any(c.name == cname for c in cameras):
            raise ConfigError(sec.at("name"), f"duplicate camera name {cname!r}")
        view = sec.get("view", str, check=lambda v: (v in VIEWS, f"must be one of {VIEWS}"))
        w, h = sec.get("resolution", (int, int), check=lambda r: (min(r) >= 1, "width and height must be >= 1"))
        scale = sec.get("scale", float, check=_positive)
        offset = sec.get("origin_offset", (float, float))
        vis_names = sec.get("visible_categories", list, default=[c.name for c in categories])
        visible = frozenset(lookup(n, _join(sec.at("visible_categories"), j)) for j, n in enumerate(vis_names))
        noise = None
        if "noise" in item:
            override = _parse_noise(item["noise"], sec.at("noise"), with_seed=False)
            noise = NoiseSpec(override.jitter_sigma_px, override.dropout_prob, base_noise.seed)
        cameras.append(CameraSpec(CameraId(i, cname, (w, h)), view, scale, offset, visible, noise))
    if not cameras:
        raise ConfigError("cameras", "at least one camera is required")

    objects = []
    seen_cats = set()
    for i, item in enumerate(top.get("objects", list)):
        sec = _Section(item, _join("objects", i), {"category", "half_extents", "center", "trajectory"})
        cat = lookup(sec.get("category", str), sec.at("category"))
        if cat in seen_cats:
            raise ConfigError(sec.at("category"), f"category {cat.name!r} already has an object")
        seen_cats.add(cat)
        half = sec.get("half_extents", (float, float, float),
                       check=lambda v: (min(v) > 0, "half extents must be > 0"))
        if "trajectory" in item:
            wps = []
            for j, wp in enumerate(sec.get("trajectory", list)):
                wsec = _Section(wp, _join(sec.at("trajectory"), j), {"t", "center"})
                wps.append((wsec.get("t", float), wsec.get("center", (float, float, float))))
            if not wps:
                raise ConfigError(sec.at("trajectory"), "needs at least one waypoint")
            if any(b[0] <= a[0] for a, b in zip(wps, wps[1:])):
                raise ConfigError(sec.at("trajectory"), "waypoint times must be strictly increasing")
            traj = Trajectory(tuple(wps))
        else:
            traj = Trajectory.static(sec.get("center", (float, float, float)))
        objects.append((WorldBox(cat, traj.waypoints[0][1], half), traj))

    prior_entries = {}
    cam_names = {c.name for c in cameras}
    prior_raw = top.get("prior", dict, default={})
    for cam_name, items in prior_raw.items():
        ppath = _join("prior", cam_name)
        if cam_name not in cam_names:
            raise ConfigError(ppath, f"unknown camera {cam_name!r}")
        if not isinstance(items, list):
            raise ConfigError(ppath, "expected a list")
        entries = []
        for j, item in enumerate(items):
            sec = _Section(item, _join(ppath, j), {"a", "b", "relation", "margin_px"})
            a = lookup(sec.get("a", str), sec.at("a"))
            b = lookup(sec.get("b", str), sec.at("b"))
            allowed = [r.value for r in SpatialRelation if r is not SpatialRelation.INDETERMINATE]
            rel = sec.get("relation", str, check=lambda v: (v in allowed, f"must be one of {allowed}"))
            margin = sec.get("margin_px", float, default=0.0, check=_nonneg)
            if any(e.category_a == a and e.category_b == b for e in entries):
                raise ConfigError(_join(ppath, j), "duplicate entry for this ordered pair")
            entries.append(PriorEntry(a, b, SpatialRelation(rel), margin))
        prior_entries[cam_name] = tuple(entries)

    gsec = _Section(raw.get("gate", {}), "gate", {"change_iou_threshold", "max_streak"})
    gate = GateConfig(gsec.get("change_iou_threshold", float, default=0.5, check=_unit),
                      gsec.get("max_streak", int, default=5, check=lambda v: (v >= 1, "must be >= 1")))

    tsec = _Section(raw.get("tracking", {}), "tracking", {"window", "match_threshold", "max_missed"})
    tracking = TrackingConfig(
        tsec.get("window", int, default=3, check=lambda v: (v >= 1 and v % 2 == 1, "must be a positive odd integer")),
        tsec.get("match_threshold", float, default=0.3, check=_unit),
        tsec.get("max_missed", int, default=10, check=lambda v: (v >= 1, "must be >= 1")),
    )

    msec = _Section(raw.get("monitor", {}), "monitor",
                    {"delta_px", "consecutive_k", "replicas_r", "absent_view_policy"})
    try:
        monitor = MonitorConfig(
            msec.get("delta_px", float, default=10.0, check=_positive),
            msec.get("consecutive_k", int, default=1),
            msec.get("replicas_r", int, default=1),
            msec.get("absent_view_policy", str, default="exclude"),
        )
    except ParameterError as exc:
        raise ConfigError("monitor", str(exc)) from exc

    stride = raw.get("stride", "auto")
    if stride == "auto":
        stride = None
    elif isinstance(stride, bool) or not isinstance(stride, int) or stride < 1:
        raise ConfigError("stride", "must be 'auto' or an integer >= 1")

    return ScenarioConfig(name, fps, duration, categories, cameras, objects, base_noise,
                          ScenePrior(prior_entries), gate, tracking, monitor, stride, raw)


def _parse_noise(data, path: str, with_seed: bool) -> NoiseSpec:
    keys = {"jitter_sigma_px", "dropout_prob"} | ({"seed"} if with_seed else set())
    sec = _Section(data, path, keys)
    seed = sec.get("seed", int, default=0) if with_seed else 0
    if not 0 <= seed < 2 ** 64:
        raise ConfigError(sec.at("seed"), "must be a 64-bit unsigned integer")
    return NoiseSpec(sec.get("jitter_sigma_px", float, default=0.0, check=_nonneg),
                     sec.get("dropout_prob", float, default=0.0, check=_unit), seed)


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"YAML parse error: {exc}") from exc
    return parse_config(raw if raw is not None else {})


def with_overrides(cfg: ScenarioConfig, **changes) -> ScenarioConfig:
    """Re-parse with top-level section overrides, e.g. ``seed=7`` or ``monitor={'delta_px': 12}``."""
    raw = json.loads(json.dumps(cfg.raw))
    for key, value in changes.items():
        if value is None:
            continue
        if key == "seed":
            raw.setdefault("noise", {})["seed"] = value
        elif isinstance(value, dict):
            raw.setdefault(key, {}).update(value)
        else:
            raw[key] = value
    return parse_config(raw)
