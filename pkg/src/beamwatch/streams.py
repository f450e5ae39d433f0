"""On-disk run artifacts: mask streams, manifest, ground truth and event logs.

Layout of a mask stream directory::

    manifest.json
    masks/cam_<name>/frame_<%06d>/<category>.pbm

Ground truth and events are JSON Lines with sorted keys, so identical runs
produce identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterator

from .core import CameraId, Category, FrameBundle, Mask
from .errors import AlignmentError, StreamGapError
from .monitor import WarningEvent
from .pbm import read_pbm, write_pbm
from .sim import GroundTruthFrame, Rect

MANIFEST = "manifest.json"
MASK_DIR = "masks"
TRACKED_DIR = "tracked"
GT_FILE = "ground_truth.jsonl"
EVENTS_FILE = "events.jsonl"


def pair_label(pair: tuple[Category, Category]) -> str:
    return f"{pair[0].name}-{pair[1].name}"


def pair_code(pair: tuple[Category, Category]) -> str:
    """Short table code, e.g. holder/detector -> H2D."""
    return f"{pair[0].name[0].upper()}2{pair[1].name[0].upper()}"


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _round(d: float | None) -> float | None:
    return None if d is None else round(float(d), 6)


# -- manifest -----------------------------------------------------------------

def write_manifest(out: Path, cfg, frame_count: int) -> None:
    doc = {
        "format": "P4",
        "name": cfg.name,
        "fps": cfg.fps,
        "frame_count": frame_count,
        "config_hash": cfg.config_hash(),
        "categories": [{"id": c.id, "name": c.name} for c in sorted(cfg.categories)],
        "cameras": [
            {"name": c.name, "index": c.id.index, "view": c.view, "resolution": list(c.resolution),
             "visible_categories": sorted(x.name for x in c.visible_categories)}
            for c in cfg.cameras
        ],
    }
    (out / MANIFEST).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


class Manifest:
    def __init__(self, doc: dict):
        self.doc = doc
        self.fps = float(doc["fps"])
        self.frame_count = int(doc["frame_count"])
        self.categories = [Category(c["id"], c["name"]) for c in doc["categories"]]
        by_name = {c.name: c for c in self.categories}
        self.cameras = [CameraId(c["index"], c["name"], tuple(c["resolution"])) for c in doc["cameras"]]
        self.views = {c["name"]: c.get("view", "") for c in doc["cameras"]}
        self.visible = {c["name"]: frozenset(by_name[n] for n in c["visible_categories"]) for c in doc["cameras"]}

    def category(self, name: str) -> Category:
        for c in self.categories:
            if c.name == name:
                return c
        raise KeyError(name)


def read_manifest(run_dir: Path) -> Manifest:
    return Manifest(json.loads((Path(run_dir) / MANIFEST).read_text()))


# -- mask streams -------------------------------------------------------------

def frame_dir(root: Path, camera: str, frame_index: int) -> Path:
    return root / f"cam_{camera}" / f"frame_{frame_index:06d}"


def write_bundle(root: Path, bundle: FrameBundle) -> None:
    d = frame_dir(root, bundle.camera.name, bundle.frame_index)
    d.mkdir(parents=True, exist_ok=True)
    for cat, mask in sorted(bundle.masks.items()):
        write_pbm(d / f"{cat.name}.pbm", mask)


def read_bundle(root: Path, camera: CameraId, frame_index: int, fps: float, categories) -> FrameBundle:
    d = frame_dir(root, camera.name, frame_index)
    if not d.is_dir():
        raise StreamGapError(frame_index, f"camera {camera.name!r} has no frame directory {d}")
    masks = {}
    for cat in categories:
        p = d / f"{cat.name}.pbm"
        if p.exists():
            masks[cat] = read_pbm(p)
    return FrameBundle(camera, frame_index, fps, masks)


def iter_mask_stream(run_dir: Path, sub: str = MASK_DIR) -> Iterator[tuple[int, dict[str, FrameBundle]]]:
    run_dir = Path(run_dir)
    man = read_manifest(run_dir)
    root = run_dir / sub
    for f in range(man.frame_count):
        yield f, {cam.name: read_bundle(root, cam, f, man.fps, man.categories) for cam in man.cameras}


# -- ground truth -------------------------------------------------------------

def gt_record(gt: GroundTruthFrame) -> dict:
    return {
        "frame_index": gt.frame_index,
        "rects": {cam: {c.name: list(r) for c, r in sorted(rects.items())} for cam, rects in gt.rects.items()},
        "distances": {pair_label(p): {v: _round(d) for v, d in per.items()} for p, per in gt.distances.items()},
        "world_gap": {pair_label(p): _round(g) for p, g in gt.world_gap.items()},
        "gt_warning": {pair_label(p): w for p, w in gt.gt_warning.items()},
    }


def parse_gt_record(doc: dict, categories) -> GroundTruthFrame:
    by_name = {c.name: c for c in categories}

    def pair(label):
        a, b = label.split("-", 1)
        return (by_name[a], by_name[b])

    return GroundTruthFrame(
        frame_index=doc["frame_index"],
        rects={cam: {by_name[c]: Rect(*r) for c, r in rects.items()} for cam, rects in doc["rects"].items()},
        distances={pair(k): dict(v) for k, v in doc["distances"].items()},
        world_gap={pair(k): v for k, v in doc["world_gap"].items()},
        gt_warning={pair(k): v for k, v in doc["gt_warning"].items()},
    )


def read_ground_truth(path: Path, categories) -> list[GroundTruthFrame]:
    frames = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                frames.append(parse_gt_record(json.loads(line), categories))
    return frames


# -- events -------------------------------------------------------------------

def event_record(ev: WarningEvent) -> dict:
    rec = {
        "frame_index": ev.frame_index,
        "pair": pair_label(ev.pair),
        "distances": {v: _round(d) for v, d in ev.min_distances_px.items()},
        "raw": ev.raw,
        "confirmed": ev.confirmed,
        "status": ev.status,
        "views_used": list(ev.views_used),
    }
    if ev.replica_raw:
        rec["replica_raw"] = list(ev.replica_raw)
    return rec


def read_events(path: Path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def check_aligned(a_keys, b_keys, what: str) -> None:
    a_keys, b_keys = list(a_keys), list(b_keys)
    if a_keys != b_keys:
        extra = sorted(set(a_keys) ^ set(b_keys))[:3]
        raise AlignmentError(f"{what}: streams are not aligned (first mismatches: {extra})")


def mask_from_rect(resolution, rect: Rect) -> Mask:
    return Mask.from_rect(resolution, *rect)
