"""Shared domain types and elementary mask arithmetic.

A :class:`Mask` stores only the tight bounding-box crop of its foreground
plus the crop origin, so full-resolution frames (2064x1544) cost memory and
time proportional to the object size rather than the image size.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np

from .errors import DimensionError, EmptyMaskError, ParameterError


@dataclass(frozen=True, order=True)
class Category:
    id: int
    name: str

    def __post_init__(self):
        if not self.name:
            raise ParameterError("category name must be non-empty")

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class CameraId:
    index: int
    name: str
    resolution: tuple[int, int]  # (width, height)

    def __post_init__(self):
        w, h = self.resolution
        if w < 1 or h < 1:
            raise ParameterError(f"camera {self.name!r}: resolution must be >= 1x1")
        if self.index < 0:
            raise ParameterError(f"camera {self.name!r}: negative index")


class PixelPoint(NamedTuple):
    row: int
    col: int


class Mask:
    """Immutable binary foreground image.

    ``resolution`` is ``(width, height)``; the full bit array has shape
    ``(height, width)`` with row 0 at the top.
    """

    __slots__ = ("width", "height", "row0", "col0", "_crop")

    def __init__(self, resolution: tuple[int, int], row0: int = 0, col0: int = 0,
                 crop: np.ndarray | None = None, *, _trusted: bool = False):
        width, height = int(resolution[0]), int(resolution[1])
        if width < 1 or height < 1:
            raise DimensionError(f"invalid resolution {resolution}")
        self.width = width
        self.height = height
        if crop is None or crop.size == 0:
            self.row0, self.col0 = 0, 0
            self._crop = np.zeros((0, 0), dtype=bool)
        elif _trusted:
            self.row0, self.col0 = row0, col0
            self._crop = crop
        else:
            self._set_clipped(int(row0), int(col0), np.asarray(crop, dtype=bool))
        self._crop.flags.writeable = False

    def _set_clipped(self, row0: int, col0: int, crop: np.ndarray) -> None:
        h, w = crop.shape
        r_lo, c_lo = max(row0, 0), max(col0, 0)
        r_hi, c_hi = min(row0 + h, self.height), min(col0 + w, self.width)
        if r_lo >= r_hi or c_lo >= c_hi:
            self.row0, self.col0 = 0, 0
            self._crop = np.zeros((0, 0), dtype=bool)
            return
        crop = crop[r_lo - row0:r_hi - row0, c_lo - col0:c_hi - col0]
        rows = np.flatnonzero(crop.any(axis=1))
        if rows.size == 0:
            self.row0, self.col0 = 0, 0
            self._crop = np.zeros((0, 0), dtype=bool)
            return
        cols = np.flatnonzero(crop.any(axis=0))
        self.row0 = r_lo + int(rows[0])
        self.col0 = c_lo + int(cols[0])
        self._crop = np.array(crop[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1], dtype=bool)

    # -- constructors -------------------------------------------------------

    @classmethod
    def empty(cls, resolution: tuple[int, int]) -> Mask:
        return cls(resolution)

    @classmethod
    def from_array(cls, bits: np.ndarray) -> Mask:
        bits = np.asarray(bits, dtype=bool)
        if bits.ndim != 2:
            raise DimensionError("mask array must be 2-D")
        return cls((bits.shape[1], bits.shape[0]), 0, 0, bits)

    @classmethod
    def from_rect(cls, resolution: tuple[int, int], row_min: int, row_max: int,
                  col_min: int, col_max: int) -> Mask:
        """Filled rectangle with inclusive pixel bounds, clipped to the image."""
        width, height = resolution
        r0, r1 = max(row_min, 0), min(row_max, height - 1)
        c0, c1 = max(col_min, 0), min(col_max, width - 1)
        if r0 > r1 or c0 > c1:
            return cls(resolution)
        crop = np.ones((r1 - r0 + 1, c1 - c0 + 1), dtype=bool)
        return cls(resolution, r0, c0, crop, _trusted=True)

    @classmethod
    def from_points(cls, resolution: tuple[int, int], points) -> Mask:
        bits = np.zeros((resolution[1], resolution[0]), dtype=bool)
        for r, c in points:
            bits[r, c] = True
        return cls.from_array(bits)

    # -- accessors ----------------------------------------------------------

    @property
    def resolution(self) -> tuple[int, int]:
        return (self.width, self.height)

    @property
    def crop(self) -> np.ndarray:
        return self._crop

    @property
    def is_empty(self) -> bool:
        return self._crop.size == 0

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self._crop))

    @property
    def bbox(self) -> tuple[int, int, int, int] | None:
        """Inclusive ``(row_min, row_max, col_min, col_max)`` or None if empty."""
        if self.is_empty:
            return None
        h, w = self._crop.shape
        return (self.row0, self.row0 + h - 1, self.col0, self.col0 + w - 1)

    @property
    def bits(self) -> np.ndarray:
        full = np.zeros((self.height, self.width), dtype=bool)
        if not self.is_empty:
            h, w = self._crop.shape
            full[self.row0:self.row0 + h, self.col0:self.col0 + w] = self._crop
        return full

    def window(self, row_min: int, row_max: int, col_min: int, col_max: int) -> np.ndarray:
        """Bits inside an inclusive window (window may exceed the image)."""
        out = np.zeros((row_max - row_min + 1, col_max - col_min + 1), dtype=bool)
        if self.is_empty:
            return out
        h, w = self._crop.shape
        r_lo, r_hi = max(self.row0, row_min), min(self.row0 + h - 1, row_max)
        c_lo, c_hi = max(self.col0, col_min), min(self.col0 + w - 1, col_max)
        if r_lo <= r_hi and c_lo <= c_hi:
            out[r_lo - row_min:r_hi - row_min + 1, c_lo - col_min:c_hi - col_min + 1] = \
                self._crop[r_lo - self.row0:r_hi - self.row0 + 1, c_lo - self.col0:c_hi - self.col0 + 1]
        return out

    def translate(self, drow: int, dcol: int) -> Mask:
        """Shift the foreground, dropping pixels that leave the image."""
        if self.is_empty:
            return self
        return Mask(self.resolution, self.row0 + drow, self.col0 + dcol, self._crop)

    def pad(self, top: int, left: int, bottom: int, right: int) -> Mask:
        """Grow the canvas with background border."""
        return Mask((self.width + left + right, self.height + top + bottom),
                    self.row0 + top, self.col0 + left, self._crop, _trusted=not self.is_empty)

    def foreground_points(self) -> np.ndarray:
        rr, cc = np.nonzero(self._crop)
        return np.column_stack((rr + self.row0, cc + self.col0))

    def __eq__(self, other):
        if not isinstance(other, Mask):
            return NotImplemented
        return (self.resolution == other.resolution and self.bbox == other.bbox
                and np.array_equal(self._crop, other._crop))

    def __hash__(self):
        return hash((self.resolution, self.bbox, self._crop.tobytes()))

    def __repr__(self):
        return f"Mask({self.width}x{self.height}, bbox={self.bbox}, count={self.count})"


def union_bbox(masks) -> tuple[int, int, int, int] | None:
    boxes = [m.bbox for m in masks if not m.is_empty]
    if not boxes:
        return None
    return (min(b[0] for b in boxes), max(b[1] for b in boxes),
            min(b[2] for b in boxes), max(b[3] for b in boxes))


def _check_same_resolution(a: Mask, b: Mask) -> None:
    if a.resolution != b.resolution:
        raise DimensionError(f"resolution mismatch: {a.resolution} vs {b.resolution}")


def masks_intersect(a: Mask, b: Mask) -> bool:
    _check_same_resolution(a, b)
    if a.is_empty or b.is_empty:
        return False
    ba, bb = a.bbox, b.bbox
    r0, r1 = max(ba[0], bb[0]), min(ba[1], bb[1])
    c0, c1 = max(ba[2], bb[2]), min(ba[3], bb[3])
    if r0 > r1 or c0 > c1:
        return False
    return bool(np.any(a.window(r0, r1, c0, c1) & b.window(r0, r1, c0, c1)))


def mask_iou(a: Mask, b: Mask) -> float:
    """Intersection over union. Two empty masks count as full agreement (1.0)."""
    _check_same_resolution(a, b)
    box = union_bbox((a, b))
    if box is None:
        return 1.0
    wa, wb = a.window(*box), b.window(*box)
    inter = np.count_nonzero(wa & wb)
    if inter == 0:
        return 0.0
    return inter / np.count_nonzero(wa | wb)


def mask_centroid(m: Mask) -> tuple[float, float]:
    if m.is_empty:
        raise EmptyMaskError("centroid of an empty mask")
    rr, cc = np.nonzero(m.crop)
    return (float(rr.mean()) + m.row0, float(cc.mean()) + m.col0)


@dataclass(frozen=True)
class FrameBundle:
    """All category masks seen by one camera at one frame index."""

    camera: CameraId
    frame_index: int
    fps: float
    masks: Mapping[Category, Mask] = field(default_factory=dict)

    def __post_init__(self):
        if self.frame_index < 0:
            raise ParameterError("frame_index must be >= 0")
        for cat, m in self.masks.items():
            if m.resolution != self.camera.resolution:
                raise DimensionError(
                    f"{self.camera.name}/{cat.name}: mask {m.resolution} != camera {self.camera.resolution}")

    @property
    def timestamp_s(self) -> float:
        return self.frame_index / self.fps

    def get(self, cat: Category) -> Mask | None:
        return self.masks.get(cat)


def fit_velocity(history, min_points: int = 3) -> tuple[float, float]:
    """Least-squares ``(rows, cols)`` per step from ``(step, centroid)`` samples.

    Zero until ``min_points`` samples exist.
    """
    if len(history) < min_points:
        return (0.0, 0.0)
    t = np.array([h[0] for h in history], dtype=float)
    c = np.array([h[1] for h in history], dtype=float)
    t -= t.mean()
    denom = float((t * t).sum())
    if denom == 0.0:
        return (0.0, 0.0)
    v = (t[:, None] * (c - c.mean(axis=0))).sum(axis=0) / denom
    return (float(v[0]), float(v[1]))
