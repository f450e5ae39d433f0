import numpy as np
import pytest
from hypothesis import given, strategies as st

from beamwatch.core import CameraId, Category, FrameBundle, Mask, mask_centroid, mask_iou, masks_intersect
from beamwatch.errors import DimensionError, EmptyMaskError

from conftest import RES, pix

W, H = RES
rects = st.tuples(st.integers(-5, H + 5), st.integers(0, 20), st.integers(-5, W + 5), st.integers(0, 20)).map(
    lambda t: (t[0], t[0] + t[1], t[2], t[2] + t[3]))
arrays = st.lists(st.booleans(), min_size=12 * 10, max_size=12 * 10).map(
    lambda v: np.array(v, dtype=bool).reshape(10, 12))


def test_empty_mask():
    m = Mask.empty(RES)
    assert m.is_empty and m.count == 0 and m.bbox is None
    assert not m.bits.any() and m.bits.shape == (H, W)


def test_bad_resolution():
    with pytest.raises(DimensionError):
        Mask.empty((0, 5))
    with pytest.raises(DimensionError):
        Mask.from_array(np.zeros(4, dtype=bool))


def test_crop_is_read_only():
    m = Mask.from_rect(RES, 1, 3, 1, 3)
    with pytest.raises(ValueError):
        m.crop[0, 0] = False


def test_iou_both_empty_is_one():
    assert mask_iou(Mask.empty(RES), Mask.empty(RES)) == 1.0


def test_iou_resolution_mismatch():
    with pytest.raises(DimensionError):
        mask_iou(Mask.empty((4, 4)), Mask.empty((5, 4)))


def test_centroid_of_empty_raises():
    with pytest.raises(EmptyMaskError):
        mask_centroid(Mask.empty(RES))


@given(rects)
def test_from_rect_count_is_clipped_area(r):
    m = Mask.from_rect(RES, *r)
    rows = max(0, min(r[1], H - 1) - max(r[0], 0) + 1)
    cols = max(0, min(r[3], W - 1) - max(r[2], 0) + 1)
    assert m.count == rows * cols


@given(arrays)
def test_array_round_trip(bits):
    m = Mask.from_array(bits)
    assert np.array_equal(m.bits, bits)
    assert m.count == bits.sum()


@given(arrays, arrays)
def test_iou_symmetric_and_bounded(a, b):
    ma, mb = Mask.from_array(a), Mask.from_array(b)
    v = mask_iou(ma, mb)
    assert v == mask_iou(mb, ma)
    assert 0.0 <= v <= 1.0
    union = (a | b).sum()
    expected = (a & b).sum() / union if union else 1.0
    assert v == pytest.approx(expected)
    assert masks_intersect(ma, mb) == bool((a & b).any())


@given(arrays, st.integers(-12, 12), st.integers(-12, 12))
def test_translate_matches_roll_with_drop(bits, dr, dc):
    m = Mask.from_array(bits).translate(dr, dc)
    expected = {(r + dr, c + dc) for r, c in zip(*np.nonzero(bits))
                if 0 <= r + dr < 10 and 0 <= c + dc < 12}
    assert pix(m) == expected


@given(arrays, st.integers(0, 3), st.integers(0, 3))
def test_pad_shifts_points(bits, top, left):
    m = Mask.from_array(bits)
    p = m.pad(top, left, 1, 2)
    assert p.resolution == (12 + left + 2, 10 + top + 1)
    assert pix(p) == {(r + top, c + left) for r, c in pix(m)}


def test_equality_ignores_construction_path():
    a = Mask.from_rect(RES, 2, 4, 3, 5)
    b = Mask.from_points(RES, [(r, c) for r in range(2, 5) for c in range(3, 6)])
    assert a == b and hash(a) == hash(b)


def test_frame_bundle_checks_resolution():
    cam = CameraId(0, "front", (8, 8))
    with pytest.raises(DimensionError):
        FrameBundle(cam, 0, 10.0, {Category(0, "holder"): Mask.empty((9, 8))})
    fb = FrameBundle(cam, 5, 10.0, {})
    assert fb.timestamp_s == 0.5 and fb.get(Category(0, "holder")) is None
