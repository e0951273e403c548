import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from billiardlab.errors import CoincidentPoints
from billiardlab.generating import (
    CubicGF, CutoffGF, LazutkinGF, ShearModifiedGF, cutoff_generating, generated_map, modified_generating,
    modified_map, shear, shear_action, twist_constant,
)
from billiardlab.lazutkin import LazutkinState, lazutkin_map, tilde_h

EPS = 0.1


def _fields(p):
    return np.array([p.h, p.h1, p.h2, p.h11, p.h12, p.h22], dtype=float)


def test_cutoff_inner_region_is_lazutkin(oval_chart):
    g = cutoff_generating(oval_chart, EPS)
    x = np.linspace(0, 1, 9)
    X = x + np.linspace(0.001, EPS, 9)
    np.testing.assert_array_equal(_fields(g.partials(x, X)), _fields(tilde_h(oval_chart, x, X)))


def test_cutoff_outer_region_is_cubic(oval_chart):
    g = cutoff_generating(oval_chart, EPS)
    x = np.linspace(0, 1, 9)
    X = x + np.linspace(math.sqrt(EPS), 0.9, 9)
    np.testing.assert_array_equal(_fields(g.partials(x, X)), _fields(CubicGF().partials(x, X)))


def test_cutoff_scale_validated(oval_chart):
    with pytest.raises(ValueError):
        CutoffGF(LazutkinGF(oval_chart), 1.5)


def test_twist_constant_positive(oval_chart):
    g = cutoff_generating(oval_chart, EPS)
    c = twist_constant(g, np.geomspace(1e-4, math.sqrt(EPS), 40))
    assert c > 0.5


def test_coincident(oval_chart):
    with pytest.raises(CoincidentPoints):
        CubicGF().partials(0.2, 0.2)


def test_zero_shear_is_lazutkin_map(oval_chart):
    x = np.linspace(0, 1, 7)
    l = np.geomspace(1e-6, 1e-3, 7)
    a = modified_map(oval_chart, 0.0)(x, l)
    b = lazutkin_map(oval_chart, LazutkinState(x, l))
    np.testing.assert_array_equal(a[0], b.x)
    np.testing.assert_array_equal(a[1], b.l)
    hp = modified_generating(oval_chart, 0.0, x, x + 0.01)
    np.testing.assert_allclose(hp.h, tilde_h(oval_chart, x, x + 0.01).h, atol=1e-9)


def test_circle_modified_map_leading_coefficient(circle_chart):
    kappa = 0.1
    l = np.geomspace(1e-9, 1e-7, 6)
    xp, lp = modified_map(circle_chart, kappa)(np.zeros_like(l), l)
    ratio = xp / np.sqrt(2 * l)
    coef = np.polyfit(l, ratio, 1)[1]
    assert coef == pytest.approx(1 - 2 * kappa, abs=1e-6)
    np.testing.assert_allclose(lp, l, rtol=1e-12)


def test_shear_action_is_area_integral():
    kappa, l = 0.15, 3e-4
    X, _ = shear(kappa, 0.0, l)
    # generating value of the shear, integrated along its orbit: int_0^gap l(g) dg
    val = quad(lambda g: g * g / (2 * kappa**2), 0.0, float(X))[0]
    assert float(shear_action(kappa, l)) == pytest.approx(val, rel=1e-14)


def test_circle_modified_momentum_leading_term(circle_chart):
    kappa = 0.1
    g = ShearModifiedGF(LazutkinGF(circle_chart), kappa)
    d = np.geomspace(1e-4, 1e-2, 8)
    l = -g.partials(np.zeros_like(d), d).h1
    c = np.polyfit(d**2, l / d**2, 1)[1]
    assert c == pytest.approx(1 / (2 * (1 - 2 * kappa) ** 2), rel=1e-6)


def test_modified_mixed_partial_vanishes_on_diagonal(oval_chart):
    g = ShearModifiedGF(CutoffGF(LazutkinGF(oval_chart), EPS), 0.15)
    assert abs(float(g.d12(0.3, 0.3 + 1e-6))) < 1e-5


def test_generated_map_of_cubic():
    X, lp = generated_map(CubicGF(), 0.2, 2e-4)
    assert X[0] == pytest.approx(0.2 + math.sqrt(4e-4), rel=1e-14)
    assert lp[0] == pytest.approx(2e-4, rel=1e-13)


@given(st.floats(0, 1), st.floats(1e-7, 1e-3), st.floats(0.01, 0.19))
def test_modified_generating_function_generates_modified_map(oval_chart, x, l, kappa):
    g = ShearModifiedGF(LazutkinGF(oval_chart), kappa)
    xp, lp = modified_map(oval_chart, kappa)(x, l)
    p = g.partials(x, xp)
    assert -float(p.h1) == pytest.approx(l, rel=1e-8)
    assert float(p.h2) == pytest.approx(float(lp), rel=1e-8)


@given(st.floats(0, 1), st.floats(0.2, 0.5))
def test_cutoff_partials_in_transition_band(oval_chart, x, gap):
    g = cutoff_generating(oval_chart, EPS)
    h = 1e-6
    f = lambda a, b: float(g(a, b))  # noqa: E731
    p = g.partials(x, x + gap)
    assert float(p.h1) == pytest.approx((f(x + h, x + gap) - f(x - h, x + gap)) / (2 * h), abs=1e-9)
    assert float(p.h2) == pytest.approx((f(x, x + gap + h) - f(x, x + gap - h)) / (2 * h), abs=1e-9)
    d1 = lambda b: float(g.partials(x, b).h1)  # noqa: E731
    assert float(p.h12) == pytest.approx((d1(x + gap + h) - d1(x + gap - h)) / (2 * h), abs=1e-7)
