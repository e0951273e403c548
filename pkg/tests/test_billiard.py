import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from billiardlab.billiard import BilliardState, generating_h, orbit, reflect, write_orbit_csv
from billiardlab.errors import CoincidentPoints, DegenerateTangency

# [DERIVED] mpmath: intersection of the ray from s=0 at angle 0.3 with the
# quadrature-built oval, located by dense sampling then root refinement.
OVAL_REFLECT = (0.06998083870568641540508, 0.2768419648664716443877)


def test_circle_closed_form(circle_curve):
    rng = np.random.default_rng(1)
    s = rng.uniform(0, 1, 200)
    v = rng.uniform(0.01, np.pi - 0.01, 200)
    sp, vp = reflect(circle_curve, BilliardState(s, v))
    np.testing.assert_allclose(sp, s + v / np.pi, atol=1e-12)
    np.testing.assert_allclose(vp, v, atol=1e-12)


def test_oval_against_brute_force(oval_curve):
    sp, vp = reflect(oval_curve, BilliardState(0.0, 0.3))
    assert sp == pytest.approx(OVAL_REFLECT[0], abs=1e-13)
    assert vp == pytest.approx(OVAL_REFLECT[1], abs=1e-12)


def test_normal_chord_on_symmetry_axis_bounces_back(oval_curve):
    # [TRIVIAL] s = 0 and s = 1/2 lie on the symmetry axis
    one = reflect(oval_curve, BilliardState(0.0, np.pi / 2))
    two = reflect(oval_curve, one)
    assert one.s == pytest.approx(0.5, abs=1e-12)
    assert two.s == pytest.approx(1.0, abs=1e-12)
    assert two.v == pytest.approx(np.pi / 2, abs=1e-12)


def test_circle_chord_generating_function(circle_curve):
    # [DERIVED] chord of a circle subtending angle 2 pi delta
    for delta in (0.05, 0.3, 0.71):
        c = generating_h(circle_curve, 0.2, 0.2 + delta)
        assert float(c.h) == pytest.approx(-math.sin(math.pi * delta) / math.pi, abs=1e-15)
        assert float(c.d1) == pytest.approx(math.cos(math.pi * delta), abs=1e-14)


def test_coincident_points(oval_curve):
    with pytest.raises(CoincidentPoints):
        generating_h(oval_curve, 0.3, 0.3)


def test_tangency_rejected(oval_curve):
    with pytest.raises(DegenerateTangency):
        reflect(oval_curve, BilliardState(0.1, 0.0))


def test_circle_rational_orbit_closes(circle_curve):
    p, q = 2, 7
    orb = orbit(circle_curve, BilliardState(0.13, np.pi * p / q), q)
    assert orb.s[-1] == pytest.approx(0.13 + p, abs=1e-12)


def test_orbit_zero_steps(oval_curve):
    orb = orbit(oval_curve, BilliardState(0.25, 0.4), 0)
    assert len(orb) == 1 and orb[0] == BilliardState(0.25, 0.4)


def test_long_oval_orbit_stays_in_annulus(oval_curve):
    orb = orbit(oval_curve, BilliardState(0.0, 0.2), 10_000)
    assert np.all((orb.v > 0) & (orb.v < np.pi))
    assert np.all(np.diff(orb.s) > 0)


def test_orbit_csv_format(oval_curve):
    buf = io.StringIO()
    write_orbit_csv(buf, [orbit(oval_curve, BilliardState(0.0, 0.2), 3)])
    lines = buf.getvalue().splitlines()
    assert lines[0] == "step,s,v"
    assert len(lines) == 5
    assert float(lines[2].split(",")[1]) == orbit(oval_curve, BilliardState(0.0, 0.2), 1).s[1]


states = st.tuples(st.floats(0, 1), st.floats(0.05, np.pi - 0.05))


def _fd_partials(curve, s, sp, h=1e-6):
    f = lambda a, b: float(generating_h(curve, a, b).h)
    d1 = (f(s + h, sp) - f(s - h, sp)) / (2 * h)
    d2 = (f(s, sp + h) - f(s, sp - h)) / (2 * h)
    d12 = (f(s + h, sp + h) - f(s + h, sp - h) - f(s - h, sp + h) + f(s - h, sp - h)) / (4 * h * h)
    return d1, d2, d12


@given(st.floats(0, 1), st.floats(0.05, 0.9))
def test_partials_match_finite_differences(oval_curve, s, gap):
    c = generating_h(oval_curve, s, s + gap)
    d1, d2, d12 = _fd_partials(oval_curve, s, s + gap, h=1e-5)
    assert abs(float(c.d1) - d1) < 1e-9
    assert abs(float(c.d2) - d2) < 1e-9
    assert abs(float(c.d12) - d12) < 1e-6 * abs(float(c.d12)) + 1e-6
    assert float(c.d12) < 0
    assert float(c.d1) == pytest.approx(math.cos(float(c.v)), abs=1e-15)


@given(states)
def test_reversibility(oval_curve, st_):
    s, v = st_
    sp, vp = reflect(oval_curve, BilliardState(s, v))
    back = reflect(oval_curve, BilliardState(-sp, vp))
    # time reversal is reflection along the reversed orientation s -> -s
    assert back.s == pytest.approx(-s, abs=1e-9)
    assert back.v == pytest.approx(v, abs=1e-9)


@given(states)
def test_area_preservation_and_twist(oval_curve, st_):
    s, v = st_
    h = 1e-6

    def F(s, v):
        sp, vp = reflect(oval_curve, BilliardState(s, v))
        return np.array([sp, -math.cos(vp)])

    # Jacobian in (s, -cos v) coordinates
    u = -math.cos(v)
    du = h * math.sin(v)
    J = np.column_stack([
        (F(s + h, v) - F(s - h, v)) / (2 * h),
        (F(s, v + h) - F(s, v - h)) / (2 * du),
    ])
    assert abs(np.linalg.det(J) - 1.0) < 1e-6
    assert J[0, 1] > 0
