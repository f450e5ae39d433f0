"""Mask validation: contour tracing, geometry priors and the temporal gate."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from collections import deque

from .core import Category, FrameBundle, Mask, fit_velocity, mask_centroid, mask_iou
from .errors import EmptyMaskError, ParameterError

# Clockwise Moore neighbourhood starting due west.
_DR = (0, -1, -1, -1, 0, 1, 1, 1)
_DC = (-1, -1, 0, 1, 1, 1, 0, -1)
_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True, eq=False)
class Contour:
    """Closed 8-connected outer boundary; ``points`` is an (N, 2) int array of (row, col)."""

    points: np.ndarray

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other):
        return isinstance(other, Contour) and np.array_equal(self.points, other.points)

    def as_tuples(self) -> list[tuple[int, int]]:
        return [(int(r), int(c)) for r, c in self.points]


def largest_component(m: Mask) -> Mask:
    """Largest 8-connected foreground component; ties go to the one met first in raster order."""
    if m.is_empty:
        raise EmptyMaskError("no components in an empty mask")
    labels, n = ndimage.label(m.crop, structure=_EIGHT)
    if n == 1:
        return m
    sizes = np.bincount(labels.ravel())[1:]
    keep = int(np.argmax(sizes)) + 1
    return Mask(m.resolution, m.row0, m.col0, labels == keep)


def _moore_trace(crop: np.ndarray) -> list[int]:
    """Trace the outer boundary of a single component; returns flat indices into the padded crop."""
    h, w = crop.shape
    pad = np.zeros((h + 2, w + 2), dtype=np.uint8)
    pad[1:-1, 1:-1] = crop
    stride = w + 2
    buf = pad.tobytes()
    offs = [_DR[k] * stride + _DC[k] for k in range(8)]
    start = int(np.flatnonzero(pad)[0])
    pts = [start]
    cur, back = start, 0  # west of the raster-first pixel is background
    first_move = None
    while True:
        for j in range(1, 9):
            k = (back + j) & 7
            nxt = cur + offs[k]
            if buf[nxt]:
                break
        else:
            return pts
        # the last background cell examined becomes the new backtrack
        bg = cur + offs[(back + j - 1) & 7]
        back = offs.index(bg - nxt)
        if cur == start:
            if first_move is None:
                first_move = nxt
            elif nxt == first_move:
                pts.pop()
                return pts
        pts.append(nxt)
        cur = nxt


def extract_contour(m: Mask) -> Contour:
    """Moore-neighbour trace of the largest component, starting at its smallest (row, col) pixel."""
    comp = largest_component(m)
    crop = comp.crop
    flat = np.asarray(_moore_trace(crop), dtype=np.int64)
    stride = crop.shape[1] + 2
    rows = flat // stride - 1 + comp.row0
    cols = flat % stride - 1 + comp.col0
    return Contour(np.column_stack((rows, cols)))


class SpatialRelation(str, enum.Enum):
    ABOVE = "above"
    BELOW = "below"
    LEFT_OF = "left_of"
    RIGHT_OF = "right_of"
    ANY = "any"
    INDETERMINATE = "indeterminate"


_INVERSE = {
    SpatialRelation.ABOVE: SpatialRelation.BELOW,
    SpatialRelation.BELOW: SpatialRelation.ABOVE,
    SpatialRelation.LEFT_OF: SpatialRelation.RIGHT_OF,
    SpatialRelation.RIGHT_OF: SpatialRelation.LEFT_OF,
}


def relation(a: Mask, b: Mask, margin_px: float = 0.0) -> SpatialRelation:
    """Relative location of ``a`` with respect to ``b`` by centroid comparison.

    Rows are checked first; columns only decide when the rows do not separate
    the centroids by more than ``margin_px``.
    """
    (ra, ca), (rb, cb) = mask_centroid(a), mask_centroid(b)
    if ra < rb - margin_px:
        return SpatialRelation.ABOVE
    if ra > rb + margin_px:
        return SpatialRelation.BELOW
    if ca < cb - margin_px:
        return SpatialRelation.LEFT_OF
    if ca > cb + margin_px:
        return SpatialRelation.RIGHT_OF
    return SpatialRelation.INDETERMINATE


@dataclass(frozen=True)
class PriorEntry:
    category_a: Category
    category_b: Category
    required: SpatialRelation
    margin_px: float = 0.0

    def __post_init__(self):
        if self.margin_px < 0:
            raise ParameterError("margin_px must be >= 0")
        if self.required is SpatialRelation.INDETERMINATE:
            raise ParameterError("a prior cannot require 'indeterminate'")


@dataclass(frozen=True)
class ScenePrior:
    """Required spatial relations per camera name."""

    entries: dict[str, tuple[PriorEntry, ...]] = field(default_factory=dict)

    def __post_init__(self):
        for cam, items in self.entries.items():
            seen = set()
            for e in items:
                key = (e.category_a, e.category_b)
                if key in seen:
                    raise ParameterError(f"duplicate prior entry {key} for camera {cam!r}")
                seen.add(key)

    def for_camera(self, name: str) -> tuple[PriorEntry, ...]:
        return self.entries.get(name, ())


@dataclass
class GeometryCheck:
    violations: list[PriorEntry] = field(default_factory=list)
    unchecked: list[PriorEntry] = field(default_factory=list)

    def violating_categories(self) -> set[Category]:
        out: set[Category] = set()
        for e in self.violations:
            out.update((e.category_a, e.category_b))
        return out


def check_geometry(bundle: FrameBundle, prior: ScenePrior) -> GeometryCheck:
    result = GeometryCheck()
    for entry in prior.for_camera(bundle.camera.name):
        a, b = bundle.get(entry.category_a), bundle.get(entry.category_b)
        if a is None or b is None or a.is_empty or b.is_empty:
            result.unchecked.append(entry)
            continue
        if entry.required is SpatialRelation.ANY:
            continue
        if not _satisfies(a, b, entry.required, entry.margin_px):
            result.violations.append(entry)
    return result


def _satisfies(a: Mask, b: Mask, required: SpatialRelation, margin: float) -> bool:
    # Evaluate the axis the requirement talks about, so a left/right prior is
    # not masked by an incidental row separation.
    (ra, ca), (rb, cb) = mask_centroid(a), mask_centroid(b)
    if required is SpatialRelation.ABOVE:
        return ra < rb - margin
    if required is SpatialRelation.BELOW:
        return ra > rb + margin
    if required is SpatialRelation.LEFT_OF:
        return ca < cb - margin
    if required is SpatialRelation.RIGHT_OF:
        return ca > cb + margin
    return True


class GateStatus(str, enum.Enum):
    FRESH = "fresh"
    SUBSTITUTED = "substituted"
    LOST = "lost"


@dataclass(frozen=True)
class GateConfig:
    change_iou_threshold: float = 0.5
    max_streak: int = 5

    def __post_init__(self):
        if not 0.0 <= self.change_iou_threshold <= 1.0:
            raise ParameterError("change_iou_threshold must lie in [0, 1]")
        if self.max_streak < 1:
            raise ParameterError("max_streak must be >= 1")


_MOTION_HISTORY = 8


@dataclass
class GateState:
    """Per-(camera, category) memory of the temporal gate.

    ``history`` holds ``(step, centroid)`` of recent fresh masks so the gate
    can predict where a moving object should be. ``previous`` is the raw
    observation of the preceding step when it was usable.
    """

    last_valid: Mask | None = None
    substitution_streak: int = 0
    previous: Mask | None = None
    step: int = 0
    history: deque = field(default_factory=lambda: deque(maxlen=_MOTION_HISTORY))

    def predicted(self) -> Mask | None:
        """Last valid mask moved along the fitted motion to the current step."""
        if self.last_valid is None:
            return None
        vr, vc = fit_velocity(self.history)
        lag = self.substitution_streak + 1
        dr, dc = int(round(lag * vr)), int(round(lag * vc))
        if (dr, dc) == (0, 0):
            return self.last_valid
        moved = self.last_valid.translate(dr, dc)
        return self.last_valid if moved.is_empty else moved


def temporal_gate(current: Mask | None, state: GateState, cfg: GateConfig,
                  geometry_ok: bool = True) -> tuple[Mask | None, GateStatus]:
    """Accept the current mask or fall back to the last valid one.

    Both the change test and the substitute use the last valid mask shifted
    by the object's recent motion; for a static object that is the last
    valid mask itself. A mask that agrees with the previous raw observation
    is also accepted, so two consistent frames re-anchor the memory after
    an unpredicted move. Mutates ``state``. A ``lost`` result passes
    ``current`` through untouched and clears the memory so the next usable
    mask starts a fresh history.
    """
    state.step += 1
    expected = state.predicted()
    present = current is not None and not current.is_empty
    previous, state.previous = state.previous, (current if present and geometry_ok else None)
    if present and geometry_ok:
        tau = cfg.change_iou_threshold
        if (expected is None or mask_iou(current, expected) >= tau
                or (previous is not None and mask_iou(current, previous) >= tau)):
            state.last_valid = current
            state.substitution_streak = 0
            state.history.append((state.step, mask_centroid(current)))
            return current, GateStatus.FRESH
    if expected is not None and state.substitution_streak < cfg.max_streak:
        state.substitution_streak += 1
        return expected, GateStatus.SUBSTITUTED
    # Streak exhausted or nothing to substitute: fail open.
    state.last_valid = None
    state.substitution_streak = 0
    state.history.clear()
    return current, GateStatus.LOST


def relation_inverse(r: SpatialRelation) -> SpatialRelation:
    return _INVERSE.get(r, r)
