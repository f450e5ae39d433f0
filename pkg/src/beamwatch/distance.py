"""Minimum inter-contour distance, exact and stride-sampled."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Category, Mask, masks_intersect
from .errors import EmptyContourError, ParameterError
from .maskproc import Contour, extract_contour

MAX_SAMPLES = 256
_CHUNK_ELEMS = 1 << 21


def _points(c: Contour | np.ndarray) -> np.ndarray:
    pts = c.points if isinstance(c, Contour) else np.asarray(c)
    if len(pts) == 0:
        raise EmptyContourError("contour has no points")
    return pts.astype(np.float64, copy=False)


def _min_dist(p: np.ndarray, q: np.ndarray) -> float:
    best = math.inf
    chunk = max(1, _CHUNK_ELEMS // len(q))
    for i in range(0, len(p), chunk):
        block = p[i:i + chunk]
        d2 = ((block[:, None, :] - q[None, :, :]) ** 2).sum(axis=2)
        best = min(best, float(d2.min()))
    return math.sqrt(best)


def min_contour_distance_exact(c1: Contour, c2: Contour) -> float:
    """Brute force over every point pair."""
    return _min_dist(_points(c1), _points(c2))


def min_contour_distance_sparse(c1: Contour, c2: Contour, stride: int | tuple[int, int]) -> float:
    """Brute force over every ``stride``-th chain point of each contour (point 0 always kept).

    ``stride`` may be a pair to sample the two contours at different rates.
    """
    s1, s2 = (stride, stride) if isinstance(stride, int) else stride
    if s1 < 1 or s2 < 1:
        raise ParameterError(f"stride must be >= 1, got {stride}")
    return _min_dist(_points(c1)[::s1], _points(c2)[::s2])


def default_stride(perimeter: int) -> int:
    return max(1, math.ceil(perimeter / MAX_SAMPLES))


@dataclass(frozen=True)
class DistanceRecord:
    camera: str
    pair: tuple[Category, Category]
    frame_index: int
    distance_px: float
    method: str  # "overlap", "exact" or "sparse(s1,s2)"


def canonical_pair(a: Category, b: Category) -> tuple[Category, Category]:
    return (a, b) if a.id <= b.id else (b, a)


def pair_distance(mask_a: Mask | None, mask_b: Mask | None, stride: int | None = None, *,
                  contours: dict | None = None, key_a=None, key_b=None) -> tuple[float, str] | None:
    """Distance between two masks or None when either is absent.

    Overlapping foregrounds short-circuit to 0. ``stride=None`` picks a
    per-contour stride capping each at MAX_SAMPLES points. ``contours`` is an
    optional per-frame cache keyed by ``key_a``/``key_b``.
    """
    if mask_a is None or mask_b is None or mask_a.is_empty or mask_b.is_empty:
        return None
    if masks_intersect(mask_a, mask_b):
        return 0.0, "overlap"
    ca = _cached_contour(mask_a, contours, key_a)
    cb = _cached_contour(mask_b, contours, key_b)
    if stride is None:
        s = (default_stride(len(ca)), default_stride(len(cb)))
    else:
        s = (stride, stride)
    if s == (1, 1):
        return min_contour_distance_exact(ca, cb), "exact"
    return min_contour_distance_sparse(ca, cb, s), f"sparse({s[0]},{s[1]})"


def _cached_contour(m: Mask, cache: dict | None, key) -> Contour:
    if cache is None or key is None:
        return extract_contour(m)
    c = cache.get(key)
    if c is None:
        c = cache[key] = extract_contour(m)
    return c


def measure_pair(camera: str, frame_index: int, a: Category, b: Category,
                 mask_a: Mask | None, mask_b: Mask | None, stride: int | None = None) -> DistanceRecord | None:
    pair = canonical_pair(a, b)
    out = pair_distance(mask_a, mask_b, stride)
    if out is None:
        return None
    return DistanceRecord(camera, pair, frame_index, out[0], out[1])
