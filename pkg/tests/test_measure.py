import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from triminspect import measure as me
from triminspect import raster as ra
from triminspect.detmath import Box
from triminspect.detector import Detection
from triminspect.errors import CalibrationError, MeasurementIncomplete, ParameterError
from triminspect.imaging import PALETTE, RgbImage


def extreme_scan(img):
    """Independent diameter oracle: widest black run over all rows."""
    mask = img.mask(PALETTE.line)
    best = 0
    for row in mask:
        xs = np.nonzero(row)[0]
        if xs.size:
            best = max(best, xs.max() - xs.min())
    return best


@pytest.mark.parametrize("mpp", [0.01, 0.02, 0.05, 0.1, 0.2])
def test_scale_factor_sweep(mpp):
    img = ra.render_calibration_circle(mpp, ra.calibration_size(mpp))
    sf = me.scale_factor(img)
    assert abs(sf.gamma - mpp) / mpp <= 0.01
    assert abs(sf.px_circle - extreme_scan(img)) <= 1
    assert sf.gamma == 20.0 / sf.px_circle


def test_scale_factor_at_005():
    sf = me.scale_factor(ra.render_calibration_circle(0.05))
    assert abs(sf.px_circle - 400) <= 1
    assert sf.gamma == pytest.approx(0.05, rel=0.01)


def test_scale_factor_errors():
    with pytest.raises(CalibrationError):
        me.scale_factor(RgbImage.blank(50, 50))
    px = RgbImage.blank(50, 50).pixels.copy()
    px[5, 5] = PALETTE.line
    px[40, 40] = PALETTE.line
    with pytest.raises(CalibrationError):
        me.scale_factor(RgbImage(50, 50, px))


def test_scale_factor_invariant():
    with pytest.raises(ParameterError):
        me.ScaleFactor(0.1, 100.0)
    assert me.ScaleFactor.from_pixels(400).gamma == 0.05


PTS = {1: (100, 360), 2: (100, -400), 3: (100, 260), 4: (100, 200), 5: (340, 260)}


def test_measure_example():
    m = me.measure_lengths(PTS, me.ScaleFactor.from_pixels(400))
    assert (m.pd, m.ul, m.gl) == pytest.approx((8.0, 30.0, 12.0))
    assert m.px == {"pd": 160, "ul": 600, "gl": 240}


def test_measure_coincident_points():
    m = me.measure_lengths({k: (5.0, 5.0) for k in range(1, 6)}, me.ScaleFactor.from_pixels(400))
    assert (m.pd, m.ul, m.gl) == (0.0, 0.0, 0.0)


def test_measure_missing_point():
    pts = dict(PTS)
    del pts[3]
    with pytest.raises(MeasurementIncomplete) as e:
        me.measure_lengths(pts, me.ScaleFactor.from_pixels(400))
    assert e.value.missing == ("point_3",)


def test_measure_euclidean_and_labels():
    pts = {f"point_{k}": v for k, v in PTS.items()}
    pts["point_1"] = (130, 240)  # 30 px across, 40 px down from #4
    m = me.measure_lengths(pts, me.ScaleFactor.from_pixels(20), mode="euclidean")
    assert m.px["pd"] == pytest.approx(50.0)
    with pytest.raises(ParameterError):
        me.measure_lengths(pts, me.ScaleFactor.from_pixels(20), mode="manhattan")


def test_points_from_detections_uses_box_centres():
    dets = [Detection(Box(3.0, 4.0, 12, 12), 1.0, "point_2"), Detection(Box(1, 1, 30, 30), 1.0, "region")]
    assert me.points_from_detections(dets) == {2: (3.0, 4.0)}


@settings(max_examples=100)
@given(scale=st.floats(0.01, 1.0), d=st.floats(1, 500))
def test_mm_equals_px_times_gamma(scale, d):
    pts = {1: (0, d), 2: (0, -d / 2), 3: (0, 0), 4: (0, 0), 5: (d, 0)}
    g = me.ScaleFactor.from_pixels(20.0 / scale)
    m = me.measure_lengths(pts, g)
    for k in ("pd", "ul", "gl"):
        assert getattr(m, k) == m.px[k] * g.gamma


def test_relative_error():
    assert me.relative_error(10.0, 10.0) == 0.0
    assert me.relative_error(10.24, 10.0) == pytest.approx(2.4)
    assert me.relative_error(9.76, 10.0) == pytest.approx(2.4)
    with pytest.raises(ParameterError):
        me.relative_error(1.0, 0.0)


def test_error_buckets():
    b = me.error_buckets([0.5, 0.9, 1.0, 3.9, 4.0, 10.0])
    assert b == {"lt_1pct": pytest.approx(2 / 6), "lt_4pct": pytest.approx(4 / 6)}
    assert me.error_buckets([]) == {"lt_1pct": 0.0, "lt_4pct": 0.0}


NOM = {"pd": 8.0, "ul": 30.0, "gl": 12.0}


def meas(pd, ul, gl):
    return me.Measurements(pd, ul, gl, {})


def test_judge_band():
    spec = me.ToleranceSpec.band(NOM, -0.5, 0.5)
    assert me.judge(meas(8.0, 30.0, 12.0), spec).passed
    assert me.judge(meas(8.5, 29.5, 12.0), spec).passed  # inclusive bounds
    j = me.judge(meas(8.0, 30.0, 12.6), spec)
    assert not j.passed and j.per_length == {"pd": True, "ul": True, "gl": False}


def test_judge_relative():
    spec = me.ToleranceSpec.relative(NOM, 2.5)
    assert me.judge(meas(8.2, 30.0, 12.0), spec).passed
    assert not me.judge(meas(8.3, 30.0, 12.0), spec).passed


@settings(max_examples=100)
@given(v=st.floats(0, 20), lo=st.floats(-2, 0), hi=st.floats(0, 2), widen=st.floats(0, 2))
def test_judge_monotone_in_bounds(v, lo, hi, widen):
    narrow = me.ToleranceSpec.band(NOM, lo, hi)
    wide = me.ToleranceSpec.band(NOM, lo - widen, hi + widen)
    m = meas(v, v, v)
    if me.judge(m, narrow).passed:
        assert me.judge(m, wide).passed


def test_tolerance_validation():
    with pytest.raises(ParameterError):
        me.LengthTolerance(1.0, 0.1, 0.2)
    with pytest.raises(ParameterError):
        me.ToleranceSpec({"pd": me.LengthTolerance(1.0)})


def test_failure_model_reference_values():
    assert me.spot_success_prob(me.FailureModel(0.983)) == pytest.approx(0.983 ** 5)
    assert round(me.spot_success_prob(me.FailureModel(0.983)) * 100, 1) == 91.8
    assert me.spot_success_prob(me.FailureModel(1.0)) == 1.0
    assert me.spot_success_prob(me.FailureModel(0.983, n_points=1)) == 0.983
    assert me.line_failure_rate(0.082, 2) == pytest.approx(0.006724, abs=1e-15)
    assert round(me.line_failure_rate(0.082, 5) * 100, 5) == 0.00037
    assert me.line_failure_rate(0.3, 1) == 0.3


@settings(max_examples=100)
@given(p=st.floats(0, 1), q=st.floats(0, 1), n=st.integers(1, 10), k=st.integers(1, 10))
def test_failure_model_monotone(p, q, n, k):
    lo, hi = min(p, q), max(p, q)
    assert me.spot_success_prob(me.FailureModel(lo, n)) <= me.spot_success_prob(me.FailureModel(hi, n))
    assert me.spot_success_prob(me.FailureModel(p, n + 1)) <= me.spot_success_prob(me.FailureModel(p, n))
    assert me.line_failure_rate(p, k + 1) <= me.line_failure_rate(p, k)


def test_failure_model_validation():
    with pytest.raises(ParameterError):
        me.FailureModel(1.2)
    with pytest.raises(ParameterError):
        me.FailureModel(0.5, n_points=0)
    with pytest.raises(ParameterError):
        me.line_failure_rate(0.5, 0)
    with pytest.raises(ParameterError):
        me.line_failure_rate(-0.1, 2)


def test_round_trip_metrology_bound():
    """Rendered vertical segments measure within two pixels of their true length."""
    from triminspect import diemodel as dm
    for seed in range(10):
        d = dm.generate_design(seed)
        prof = dm.section_at(d, dm.place_spots(d, d.target_line.line_id, 3)[1])
        for mpp in (ra.crop_mm_per_px(2.0), 0.1):
            zvp = ra.zoom_viewport(prof.target_center, mpp)
            px = {k: tuple(math.floor(c + 0.5) for c in ra.mm_to_px(zvp, q))
                  for k, q in prof.truth_points.items()}
            m = me.measure_lengths(px, me.ScaleFactor.from_pixels(20.0 / mpp))
            for k in ("pd", "ul", "gl"):
                assert abs(getattr(m, k) - prof.truth_lengths[k]) <= 2 * mpp
