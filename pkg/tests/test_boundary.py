import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from billiardlab import boundary
from billiardlab.boundary import RadiusProfile, build_curve
from billiardlab.errors import ClosureViolation, ConfigError, NonConvex

R = 1.0 / (2.0 * math.pi)

# [DERIVED] mpmath quadrature of r(psi) = 1 + 0.3 cos(2 psi), scaled to unit perimeter,
# between tangent angles pi/2 + 0.3 and pi/2 + 1.1 (s = 0 sits at tangent angle pi/2).
OVAL_S1 = 0.034266636819500518965
OVAL_S2 = 0.15576900753009853336
OVAL_CHORD = (-0.079027899332949614311, 0.088074389584894192475)
OVAL_RHO_S1 = 0.11974807024509604787


def test_constant_profile_is_unit_perimeter_circle():
    # [TRIVIAL]
    curve = build_curve(RadiusProfile((3.7,)))
    s = np.linspace(0, 1, 17)
    np.testing.assert_allclose(curve.radius_of_curvature(s), R, rtol=1e-15)
    assert curve.is_circle


def test_circle_points(circle_curve):
    # [TRIVIAL]
    s = np.linspace(0, 1, 33)
    p = circle_curve.point(s)
    np.testing.assert_allclose(p[:, 0], R * np.cos(2 * np.pi * s), atol=1e-15)
    np.testing.assert_allclose(p[:, 1], R * np.sin(2 * np.pi * s), atol=1e-15)


def test_oval_perimeter_and_min_radius(oval_curve):
    # [DERIVED] polygonal perimeter of a dense sampling
    s = np.linspace(0, 1, 200001)
    p = oval_curve.point(s)
    perim = np.sum(np.hypot(*np.diff(p, axis=0).T))
    assert perim == pytest.approx(1.0, abs=1e-9)
    assert oval_curve.summary()["min_radius_of_curvature"] == pytest.approx(0.7 * R, rel=1e-12)


def test_oval_chord_against_quadrature(oval_curve):
    th = oval_curve.theta_of_s(np.array([OVAL_S1, OVAL_S2]))
    np.testing.assert_allclose(th, [0.3, 1.1], atol=1e-13)
    d = oval_curve.point(OVAL_S2) - oval_curve.point(OVAL_S1)
    np.testing.assert_allclose(np.ravel(d), OVAL_CHORD, atol=1e-14)
    assert oval_curve.radius_of_curvature(OVAL_S1) == pytest.approx(OVAL_RHO_S1, rel=1e-13)


def test_oval_radius_at_zero_matches_embedded_curvature(oval_curve):
    # [DERIVED] finite-difference curvature of the embedded curve
    h = 1e-4
    p = oval_curve.point(np.array([-h, 0.0, h]))
    d1 = (p[2] - p[0]) / (2 * h)
    d2 = (p[2] - 2 * p[1] + p[0]) / h**2
    kappa = abs(d1[0] * d2[1] - d1[1] * d2[0]) / np.hypot(*d1) ** 3
    assert 1.0 / kappa == pytest.approx(oval_curve.radius_of_curvature(0.0), abs=1e-6)
    assert oval_curve.radius_of_curvature(0.0) == pytest.approx(0.7 * R, rel=1e-14)


def test_nonconvex_profile_rejected():
    # [TRIVIAL]
    with pytest.raises(NonConvex):
        build_curve(RadiusProfile((1.0, 0.0, 1.1)))


def test_frequency_one_rejected():
    with pytest.raises(ClosureViolation):
        build_curve(RadiusProfile((1.0, 0.2)))


def test_profile_json_roundtrip(tmp_path):
    prof = RadiusProfile((1.0, 0.0, 0.2, 0.05), (0.0, 0.0, 0.0, 0.1))
    path = tmp_path / "p.json"
    path.write_text(prof.to_json())
    assert RadiusProfile.load(path) == prof
    with pytest.raises(ConfigError):
        RadiusProfile.from_json(json.dumps({"cos": [1.0], "bogus": 1}))
    with pytest.raises(ConfigError):
        RadiusProfile.load(tmp_path / "missing.json")


def test_module_level_accessors(oval_curve):
    s = np.array([0.1, 0.7])
    np.testing.assert_array_equal(boundary.point(oval_curve, s), oval_curve.point(s))
    np.testing.assert_array_equal(boundary.tangent_angle(oval_curve, s), oval_curve.tangent_angle(s))
    np.testing.assert_array_equal(boundary.radius_of_curvature(oval_curve, s), oval_curve.radius_of_curvature(s))


profiles = st.tuples(
    st.floats(-0.25, 0.25), st.floats(-0.2, 0.2), st.floats(-0.15, 0.15), st.floats(-0.1, 0.1)
).map(lambda c: RadiusProfile((1.0, 0.0, c[0], c[2]), (0.0, 0.0, c[1], c[3])))


@given(profiles, st.floats(0, 1))
def test_periodic_and_arc_length(prof, s):
    curve = build_curve(prof)
    assert np.linalg.norm(curve.point(s + 1.0) - curve.point(s)) < 1e-10
    h = 1e-5
    speed = np.linalg.norm(curve.point(s + h) - curve.point(s - h)) / (2 * h)
    assert abs(speed - 1.0) < 1e-8
    assert curve.radius_of_curvature(s) > 0


@given(profiles)
def test_tangent_angle_derivative_is_curvature(prof):
    curve = build_curve(prof)
    s = np.linspace(0, 1, 1000, endpoint=False)
    h = 1e-5
    dth = (curve.tangent_angle(s + h) - curve.tangent_angle(s - h)) / (2 * h)
    np.testing.assert_allclose(dth, 1.0 / curve.radius_of_curvature(s), rtol=1e-8)


@given(profiles)
def test_rebuild_from_sampled_profile(prof):
    curve = build_curve(prof)
    again = build_curve(RadiusProfile.from_samples(curve.sample_profile(64)))
    s = np.linspace(0, 1, 50)
    np.testing.assert_allclose(again.point(s), curve.point(s), atol=1e-8)
