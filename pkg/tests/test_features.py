import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vfe.alignment import AlignedSession
from vfe.config import ACCEL_CHANNELS, IMU_CHANNELS, PipelineConfig
from vfe.errors import DegenerateRange, LengthMismatch, SchemaViolation
from vfe.features import (
    ABSOLUTE_COLUMNS,
    FeatureMatrix,
    ScalingAnchors,
    build_absolute_features,
    build_relative_features,
    concat_features,
    magnitude,
    newtons_to_pounds,
    percentile_scale,
)
from vfe.pipeline import process_session


def fake_aligned(n=200, seed=0, gyro_zero=False):
    rng = np.random.default_rng(seed)
    env = {c: 1.0 + rng.random(n) for c in IMU_CHANNELS}
    if gyro_zero:
        for c in ("gyro_x", "gyro_y", "gyro_z"):
            env[c] = np.zeros(n)
    return AlignedSession("fake", 400.0, np.arange(n) / 400.0, env, 10 + rng.random(n) * 50, None, None)


def test_magnitude_basics():
    assert magnitude([3.0], [4.0], [0.0]).tolist() == [5.0]
    assert np.all(magnitude(np.zeros(5), np.zeros(5), np.zeros(5)) == 0)
    with pytest.raises(LengthMismatch):
        magnitude([1, 2], [1], [1, 2])


def test_magnitude_matches_scalar_loop():
    rng = np.random.default_rng(1)
    x, y, z = rng.normal(size=(3, 100))
    expected = [(a * a + b * b + c * c) ** 0.5 for a, b, c in zip(x, y, z)]
    np.testing.assert_allclose(magnitude(x, y, z), expected, rtol=1e-12)


def test_percentile_fixture():
    x = np.arange(100.0)
    scaled, anchors = percentile_scale(x)
    assert anchors.p5 == pytest.approx(4.95, abs=1e-12)
    assert anchors.p95 == pytest.approx(94.05, abs=1e-12)
    assert anchors.scale(4.95) == pytest.approx(0.0, abs=1e-12)
    assert anchors.scale(94.05) == pytest.approx(100.0, abs=1e-12)
    # tails are kept, not clipped
    assert scaled.min() < 0 and scaled.max() > 100


def test_constant_signal_is_degenerate():
    with pytest.raises(DegenerateRange):
        percentile_scale(np.full(10, 3.0))
    with pytest.raises(DegenerateRange):
        ScalingAnchors(2.0, 2.0)


@settings(max_examples=40, deadline=None)
@given(a=st.floats(0.01, 100), b=st.floats(-100, 100), seed=st.integers(0, 1000))
def test_percentile_affine_invariance_and_round_trip(a, b, seed):
    x = np.random.default_rng(seed).normal(size=64)
    s1, anchors = percentile_scale(x)
    s2, _ = percentile_scale(a * x + b)
    np.testing.assert_allclose(s1, s2, atol=1e-8)
    np.testing.assert_allclose(anchors.unscale(anchors.scale(x)), x, atol=1e-12)


@pytest.mark.parametrize("newtons, pounds", [(0.0, 0.0), (100.0, 22.4809)])
def test_newtons_to_pounds(newtons, pounds):
    assert newtons_to_pounds(newtons) == pounds


def test_one_pound_reciprocal():
    assert newtons_to_pounds(4.448) == pytest.approx(0.99995, abs=1e-5)


def test_absolute_schema_and_target():
    a = fake_aligned()
    fm = build_absolute_features(a)
    assert fm.column_names == ABSOLUTE_COLUMNS
    assert fm.rows.shape == (200, 8)
    np.testing.assert_allclose(fm.target, 0.224809 * a.force, rtol=1e-15)
    assert fm.units == "lb"
    assert set(fm.session_ids) == {"fake"}


def test_absolute_gyro_zero():
    fm = build_absolute_features(fake_aligned(gyro_zero=True))
    assert np.all(fm.rows[:, ABSOLUTE_COLUMNS.index("gyro_mag")] == 0)


def test_absolute_magnitude_recomputed(short_session):
    fm = process_session(short_session, PipelineConfig()).features
    acc = fm.rows[:, [ABSOLUTE_COLUMNS.index(c) for c in ACCEL_CHANNELS]]
    np.testing.assert_allclose(fm.rows[:, 6], np.sqrt((acc ** 2).sum(axis=1)), rtol=1e-12)


def test_relative_features(short_session):
    p = process_session(short_session, PipelineConfig(kind="relative"))
    fm = p.features
    assert fm.column_names == ("accel_x_pct", "gyro_y_pct")
    assert fm.units == "percent"
    force = p.aligned.force
    p5, p95 = np.percentile(force, [5, 95])
    anchors = ScalingAnchors(p5, p95)
    assert anchors.scale(p5) == 0.0 and anchors.scale(p95) == 100.0
    absolute = newtons_to_pounds(force)
    assert np.corrcoef(fm.target, absolute)[0, 1] >= 0.999


def test_relative_constant_channel_fails():
    a = fake_aligned()
    a.envelopes["accel_x"] = np.ones(200)
    with pytest.raises(DegenerateRange):
        build_relative_features(a)


def test_matrix_validation_and_concat():
    with pytest.raises(SchemaViolation):
        FeatureMatrix(np.ones((3, 2)), ("a",), None, np.array(["s"] * 3), "absolute")
    with pytest.raises(SchemaViolation):
        FeatureMatrix(np.array([[np.nan]]), ("a",), None, np.array(["s"]), "absolute")
    with pytest.raises(LengthMismatch):
        FeatureMatrix(np.ones((3, 1)), ("a",), np.ones(2), np.array(["s"] * 3), "absolute")
    a = build_absolute_features(fake_aligned(seed=1))
    b = build_relative_features(fake_aligned(seed=2))
    with pytest.raises(SchemaViolation):
        concat_features([a, b])
    both = concat_features([a, build_absolute_features(fake_aligned(n=50, seed=3))])
    assert both.n_samples == 250


def test_csv_export_header():
    fm = build_absolute_features(fake_aligned(n=5))
    lines = fm.to_csv().splitlines()
    assert lines[0] == ",".join(ABSOLUTE_COLUMNS) + ",target"
    assert len(lines) == 6 and len(lines[1].split(",")) == 9
