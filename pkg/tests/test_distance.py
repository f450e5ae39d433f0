import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from beamwatch.core import Category, Mask
from beamwatch.distance import (MAX_SAMPLES, canonical_pair, default_stride, measure_pair,
                                min_contour_distance_exact, min_contour_distance_sparse, pair_distance)
from beamwatch.errors import EmptyContourError, ParameterError
from beamwatch.maskproc import Contour, extract_contour
from beamwatch.sim import Rect, exact_rect_distance_px

import oracles
from conftest import pix

RES = (120, 90)
D, I = Category(1, "detector"), Category(3, "ic")


def rect_strategy():
    return st.tuples(st.integers(0, 80), st.integers(0, 25), st.integers(0, 110), st.integers(0, 25)).map(
        lambda t: Rect(t[0], min(t[0] + t[1], 89), t[2], min(t[2] + t[3], 119)))


@given(rect_strategy(), rect_strategy())
def test_rect_contours_match_analytic_distance(r1, r2):
    m1, m2 = Mask.from_rect(RES, *r1), Mask.from_rect(RES, *r2)
    out = pair_distance(m1, m2, stride=1)
    assert out[0] == pytest.approx(exact_rect_distance_px(r1, r2), abs=1e-9)


@given(st.integers(0, 10_000), st.sampled_from([1, 2, 4, 8, 16]))
def test_sparse_error_bound(seed, s):
    rng = np.random.default_rng(seed)
    blobs = []
    for _ in range(2):
        r, c = rng.integers(0, 60), rng.integers(0, 100)
        bits = np.zeros((RES[1], RES[0]), dtype=bool)
        bits[r:r + rng.integers(3, 25), c:c + rng.integers(3, 25)] = True
        bits &= rng.random(bits.shape) < 0.9
        blobs.append(extract_contour(Mask.from_array(bits)))
    exact = min_contour_distance_exact(*blobs)
    sparse = min_contour_distance_sparse(*blobs, s)
    assert 0.0 <= sparse - exact <= s * math.sqrt(2) + 1e-9


@given(st.integers(0, 10_000))
def test_exact_is_symmetric_and_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    a = Contour(rng.integers(0, 50, size=(rng.integers(1, 30), 2)))
    b = Contour(rng.integers(0, 50, size=(rng.integers(1, 30), 2)))
    d = min_contour_distance_exact(a, b)
    assert d == min_contour_distance_exact(b, a)
    ref = oracles.min_pixel_distance({tuple(p) for p in a.points}, {tuple(p) for p in b.points})
    assert d == pytest.approx(ref)


@given(st.integers(0, 10_000), st.integers(1, 6))
def test_sparse_monotone_in_nested_strides(seed, s):
    rng = np.random.default_rng(seed)
    a = Contour(rng.integers(0, 80, size=(60, 2)))
    b = Contour(rng.integers(0, 80, size=(60, 2)))
    # every 2s-th point is also an s-th point, so the coarser minimum cannot be smaller
    assert min_contour_distance_sparse(a, b, 2 * s) >= min_contour_distance_sparse(a, b, s)


def test_square_pair_within_bound():
    a = extract_contour(Mask.from_rect((40, 16), 0, 10, 0, 10))
    b = extract_contour(Mask.from_rect((40, 16), 0, 10, 17, 27))
    exact = min_contour_distance_exact(a, b)
    sparse = min_contour_distance_sparse(a, b, 4)
    assert exact <= sparse <= exact + 4 * math.sqrt(2)


def test_stride_validation_and_empty():
    c = Contour(np.array([[0, 0]]))
    with pytest.raises(ParameterError):
        min_contour_distance_sparse(c, c, 0)
    with pytest.raises(EmptyContourError):
        min_contour_distance_exact(Contour(np.zeros((0, 2), dtype=int)), c)


def test_default_stride_caps_samples():
    assert default_stride(1) == 1
    assert default_stride(MAX_SAMPLES) == 1
    assert default_stride(MAX_SAMPLES + 1) == 2
    for n in (300, 1000, 5000):
        assert math.ceil(n / default_stride(n)) <= MAX_SAMPLES


def test_overlap_short_circuit_and_absent():
    a = Mask.from_rect(RES, 10, 20, 10, 20)
    b = Mask.from_rect(RES, 15, 25, 18, 30)
    assert pair_distance(a, b) == (0.0, "overlap")
    assert pair_distance(a, None) is None
    assert pair_distance(a, Mask.empty(RES)) is None


def test_measure_pair_canonical_order():
    a = Mask.from_rect(RES, 10, 20, 10, 20)
    b = Mask.from_rect(RES, 10, 20, 30, 40)
    rec = measure_pair("front", 3, I, D, b, a)
    assert rec.pair == (D, I) == canonical_pair(I, D)
    assert rec.distance_px == 10.0 and rec.method == "exact"


def test_contour_cache_reused():
    a = Mask.from_rect(RES, 10, 20, 10, 20)
    b = Mask.from_rect(RES, 10, 20, 30, 40)
    cache = {}
    pair_distance(a, b, contours=cache, key_a="a", key_b="b")
    assert set(cache) == {"a", "b"}
    sentinel = Contour(np.array([[10, 29]]))
    cache["b"] = sentinel
    assert pair_distance(a, b, contours=cache, key_a="a", key_b="b")[0] == 9.0


def test_contour_distance_equals_pixel_distance_for_rects():
    r1, r2 = oracles.rect_pixels(0, 10, 0, 10), oracles.rect_pixels(14, 20, 13, 20)
    m1 = Mask.from_points((32, 32), sorted(r1))
    m2 = Mask.from_points((32, 32), sorted(r2))
    assert pair_distance(m1, m2, 1)[0] == oracles.min_pixel_distance(pix(m1), pix(m2)) == 5.0
