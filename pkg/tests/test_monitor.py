import math

import pytest
from hypothesis import given, strategies as st

from beamwatch.core import Category
from beamwatch.errors import ParameterError
from beamwatch.monitor import (Monitor, MonitorConfig, ReliabilityModel, calibrate_threshold, combined_error,
                               confirm, evaluate_frame, fuse_replicas, mean_time_between_errors)

H, D = Category(0, "holder"), Category(1, "detector")
CFG = MonitorConfig()


def test_all_views_must_agree():
    assert evaluate_frame({"f": 3.0, "s": 4.0, "t": 9.9}, CFG) == (True, "ok", ("f", "s", "t"))
    assert evaluate_frame({"f": 3.0, "s": 12.0}, CFG)[0] is False
    assert evaluate_frame({"f": 10.0}, CFG)[0] is True


def test_absent_views_excluded_or_far():
    assert evaluate_frame({"f": 3.0, "t": None}, CFG) == (True, "ok", ("f",))
    assert evaluate_frame({"f": None, "t": None}, CFG) == (False, "unknown", ())
    far = MonitorConfig(absent_view_policy="treat_as_far")
    assert evaluate_frame({"f": 3.0, "t": None}, far)[0] is False


def test_confirm_and_fuse():
    assert confirm([False, True, True], 2)
    assert not confirm([True, False, True], 2)
    assert not confirm([True], 2)
    assert fuse_replicas([False, True]) and not fuse_replicas([False, False])
    with pytest.raises(ParameterError):
        fuse_replicas([])


def test_calibration_rounding_and_degenerate_warning():
    assert calibrate_threshold(3.9, 2.8) == 10
    assert calibrate_threshold(2.0, 1.0) == 4
    with pytest.warns(UserWarning):
        assert calibrate_threshold(0.0, 0.0) == 0
    with pytest.raises(ParameterError):
        calibrate_threshold(-1, 0)


def test_reliability():
    assert combined_error(ReliabilityModel(0.002, 1, 1)) == 0.002
    assert mean_time_between_errors(ReliabilityModel(0.0, 2, 2)) == (math.inf, math.inf)
    with pytest.raises(ParameterError):
        ReliabilityModel(1.5)


@given(st.floats(0, 1), st.integers(1, 3), st.integers(1, 3))
def test_combined_error_never_grows(p, r, k):
    assert combined_error(ReliabilityModel(p, r, k)) <= p


@given(st.lists(st.booleans(), min_size=1, max_size=40), st.integers(1, 4))
def test_confirmed_requires_k_raw(raws, k):
    mon = Monitor(MonitorConfig(consecutive_k=k))
    flags = []
    for f, raw in enumerate(raws):
        d = 1.0 if raw else 50.0
        ev, = mon.step(f, [{(H, D): {"f": d}}])
        flags.append(ev.raw)
        if ev.confirmed:
            assert len(flags) >= k and all(flags[-k:])


def test_monitor_rejects_out_of_order_frames():
    mon = Monitor(CFG)
    mon.step(3, [{(H, D): {"f": 1.0}}])
    with pytest.raises(ParameterError):
        mon.step(3, [{(H, D): {"f": 1.0}}])


def test_replica_fusion_in_monitor():
    mon = Monitor(MonitorConfig(replicas_r=2))
    ev, = mon.step(0, [{(H, D): {"f": 50.0}}, {(H, D): {"f": 2.0}}])
    assert ev.raw and ev.replica_raw == (False, True)


def test_config_validation():
    for bad in (dict(delta_px=0), dict(consecutive_k=0), dict(replicas_r=0), dict(absent_view_policy="x")):
        with pytest.raises(ParameterError):
            MonitorConfig(**bad)
