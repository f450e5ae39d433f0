"""Greedy IoU tracking-by-detection with majority-vote temporal smoothing.

Stands in for a learned video tracker: masks go in, identity-stable and
temporally smoothed masks come out, one tracker per camera.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .core import CameraId, Category, FrameBundle, Mask, fit_velocity, mask_centroid, mask_iou, union_bbox
from .errors import ParameterError

MATCH_THRESHOLD = 0.3
MAX_MISSED = 10
WINDOW = 3
MOTION_HISTORY = 8  # centroids used for the velocity fit
MOTION_CHANGE_PX = 6.0  # centroid miss that restarts the window
_MIN_FIT = 2


@dataclass
class Track:
    track_id: int
    category: Category
    camera: CameraId
    current_mask: Mask
    age: int = 0
    missed: int = 0
    window: deque = field(default_factory=deque)  # (frame, mask)
    history: deque = field(default_factory=lambda: deque(maxlen=MOTION_HISTORY))  # (frame, centroid)

    def velocity(self) -> tuple[float, float]:
        """Least-squares centroid velocity in px/frame; zero until enough history."""
        return fit_velocity(self.history, _MIN_FIT)

    def predicted_centroid(self, frame: int) -> tuple[float, float] | None:
        if len(self.history) < 3:
            return None
        vr, vc = self.velocity()
        t = np.array([h[0] for h in self.history], dtype=float)
        c = np.array([h[1] for h in self.history], dtype=float).mean(axis=0)
        lag = frame - t.mean()
        return (c[0] + lag * vr, c[1] + lag * vc)

    def observe(self, frame: int, mask: Mask) -> None:
        """Record a matched detection; a sudden change of motion restarts the window."""
        centroid = mask_centroid(mask)
        expected = self.predicted_centroid(frame)
        if expected is not None and np.hypot(centroid[0] - expected[0], centroid[1] - expected[1]) > MOTION_CHANGE_PX:
            self.window.clear()
            self.history.clear()
        self.current_mask = mask
        self.window.append((frame, mask))
        self.history.append((frame, centroid))

    def aligned_window(self, frame: int) -> list[Mask]:
        """Window masks shifted along the fitted motion to ``frame``."""
        vr, vc = self.velocity()
        out = []
        for f, m in self.window:
            lag = frame - f
            dr, dc = int(round(lag * vr)), int(round(lag * vc))
            out.append(m if (dr, dc) == (0, 0) else m.translate(dr, dc))
        return out


@dataclass
class Association:
    assignments: list[tuple[int, int]]  # (track_id, detection index)
    new_detections: list[int]
    unmatched_tracks: list[int]


def associate(prev_tracks: list[Track], detections: list[tuple[Category, Mask]],
              match_threshold: float = MATCH_THRESHOLD) -> Association:
    """Greedy per-category matching by descending IoU.

    Ties break on the smaller track id, then on the detection centroid, so
    the result does not depend on detection order.
    """
    candidates = []
    for di, (cat, mask) in enumerate(detections):
        if mask.is_empty:
            continue
        key = mask_centroid(mask)
        for tr in prev_tracks:
            if tr.category != cat:
                continue
            iou = mask_iou(tr.current_mask, mask)
            if iou >= match_threshold:
                candidates.append((-iou, tr.track_id, key, di))
    candidates.sort(key=lambda c: c[:3])
    used_tracks, used_dets = set(), set()
    assignments = []
    for _, tid, _, di in candidates:
        if tid in used_tracks or di in used_dets:
            continue
        used_tracks.add(tid)
        used_dets.add(di)
        assignments.append((tid, di))
    new = [di for di, (_, m) in enumerate(detections) if di not in used_dets and not m.is_empty]
    new.sort(key=lambda di: (detections[di][0].id, mask_centroid(detections[di][1])))
    unmatched = sorted(tr.track_id for tr in prev_tracks if tr.track_id not in used_tracks)
    return Association(assignments, new, unmatched)


def smooth_mask(window) -> Mask:
    """Per-pixel majority vote; an even split counts as foreground."""
    masks = list(window)
    if not masks:
        raise ParameterError("smoothing window is empty")
    if len(masks) == 1:
        return masks[0]
    res = masks[0].resolution
    box = union_bbox(masks)
    if box is None:
        return Mask.empty(res)
    votes = np.zeros((box[1] - box[0] + 1, box[3] - box[2] + 1), dtype=np.uint8)
    for m in masks:
        votes += m.window(*box)
    return Mask(res, box[0], box[2], votes >= (len(masks) + 1) // 2)


class Tracker:
    """Per-camera track set; ``step`` must be called in frame order.

    Smoothing votes over motion-aligned masks: older window entries are
    shifted by the track's fitted velocity so a moving object is not
    reported one frame late. When a detection lands far from where the fit
    puts it (the object started, stopped or turned), the window restarts.
    """

    def __init__(self, camera: CameraId, window: int = WINDOW,
                 match_threshold: float = MATCH_THRESHOLD, max_missed: int = MAX_MISSED):
        if window < 1 or window % 2 == 0:
            raise ParameterError("smoothing window must be a positive odd number")
        self.camera = camera
        self.window = window
        self.match_threshold = match_threshold
        self.max_missed = max_missed
        self.tracks: dict[int, Track] = {}
        self.retired: list[int] = []
        self._next_id = 0
        self._frame = -1

    def step(self, detections: list[tuple[Category, Mask]]) -> list[tuple[Category, int, Mask]]:
        """Associate, update and smooth. Returns ``(category, track_id, smoothed mask)`` per live detection."""
        self._frame += 1
        frame = self._frame
        assoc = associate(list(self.tracks.values()), detections, self.match_threshold)
        touched = []
        for tid, di in assoc.assignments:
            tr = self.tracks[tid]
            tr.missed = 0
            tr.age += 1
            tr.observe(frame, detections[di][1])
            touched.append(tr)
        for di in assoc.new_detections:
            cat, mask = detections[di]
            tr = Track(self._next_id, cat, self.camera, mask, window=deque([(frame, mask)], maxlen=self.window))
            tr.history.append((frame, mask_centroid(mask)))
            self._next_id += 1
            self.tracks[tr.track_id] = tr
            touched.append(tr)
        for tid in assoc.unmatched_tracks:
            tr = self.tracks[tid]
            tr.missed += 1
            tr.age += 1
            if tr.missed >= self.max_missed:
                del self.tracks[tid]
                self.retired.append(tid)
        touched.sort(key=lambda t: (t.category.id, t.track_id))
        return [(t.category, t.track_id, smooth_mask(t.aligned_window(frame))) for t in touched]


def track_step(tracker: Tracker, gated: FrameBundle) -> tuple[FrameBundle, dict[Category, int]]:
    """Run one frame through ``tracker``.

    Single-instance scenes give one output mask per category; when a
    category has several live tracks the lowest track id wins the slot.
    """
    detections = [(c, m) for c, m in sorted(gated.masks.items()) if not m.is_empty]
    out: dict[Category, Mask] = {}
    ids: dict[Category, int] = {}
    for cat, tid, mask in tracker.step(detections):
        if cat not in out:
            out[cat] = mask
            ids[cat] = tid
    return FrameBundle(gated.camera, gated.frame_index, gated.fps, out), ids
