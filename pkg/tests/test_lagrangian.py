import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from billiardlab.errors import InversionFail
from billiardlab.generating import CubicGF, CutoffGF, LazutkinGF, ShearModifiedGF
from billiardlab.suspension.lagrangian import (
    InterpolatingLagrangian, kinetic_hamiltonian, lagrangian, legendre_hamiltonian, minimize_path, momentum,
    path_action, stiffness,
)

EPS = 0.1


@pytest.fixture(scope="module")
def genfns(oval_chart):
    base = LazutkinGF(oval_chart)
    cut = CutoffGF(base, EPS)
    return {"cubic": CubicGF(), "lazutkin": base, "cutoff": cut, "shear": ShearModifiedGF(cut, 0.15)}


def test_cubic_lagrangian_is_exact():
    v = np.geomspace(1e-4, 0.5, 12)
    for t in (0.0, 0.3, 1.0):
        np.testing.assert_allclose(lagrangian(CubicGF(), 0.2, v, t), v**3 / 6, rtol=1e-10, atol=0)
        np.testing.assert_allclose(momentum(CubicGF(), 0.2, v, t), v**2 / 2, rtol=1e-10, atol=0)


def test_boundary_conditions_at_zero_velocity(genfns):
    for g in genfns.values():
        lagr = InterpolatingLagrangian(g)
        assert float(lagr(0.4, 0.0, 0.5)) == 0.0
        assert float(lagr.momentum(0.4, 0.0, 0.5)) == 0.0
        assert float(lagr.stiffness(0.4, 0.0, 0.5)) == 0.0


def test_cubic_legendre_dual():
    lagr = InterpolatingLagrangian(CubicGF())
    l = np.geomspace(1e-8, 1e-2, 10)
    res = legendre_hamiltonian(lagr, 0.1, l, 0.4)
    np.testing.assert_allclose(res.v, np.sqrt(2 * l), rtol=1e-14)
    np.testing.assert_allclose(res.H, 2 * math.sqrt(2) / 3 * l**1.5, rtol=1e-14)
    zero = legendre_hamiltonian(lagr, 0.1, 0.0, 0.4)
    assert float(zero.H) == 0.0 and float(zero.v) == 0.0


def test_negative_action_rejected():
    with pytest.raises(InversionFail):
        legendre_hamiltonian(InterpolatingLagrangian(CubicGF()), 0.1, -1e-6, 0.0)


def test_envelope_identity(genfns):
    lagr = InterpolatingLagrangian(genfns["cutoff"])
    l = np.array([1e-5, 1e-4, 1e-3])
    h = 1e-3 * l
    res = legendre_hamiltonian(lagr, 0.3, l, 0.6)
    dH = (legendre_hamiltonian(lagr, 0.3, l + h, 0.6).H - legendre_hamiltonian(lagr, 0.3, l - h, 0.6).H) / (2 * h)
    np.testing.assert_allclose(dH, res.v, rtol=1e-7)


def test_path_minimisation_reproduces_generating_function(genfns):
    g = genfns["cutoff"]
    lagr = InterpolatingLagrangian(g)
    x, X = 0.2, 0.23
    rng = np.random.default_rng(3)
    start = np.linspace(x, X, 51)
    start[1:-1] += 0.2 * (X - x) / 50 * rng.uniform(-1, 1, 49)
    assert path_action(lagr, start) > float(g(x, X))
    res = minimize_path(lagr, x, X, start=start)
    assert res.action == pytest.approx(float(g(x, X)), rel=1e-6)
    assert res.deviation < 1e-8


def test_path_nodes_must_be_ordered(genfns):
    lagr = InterpolatingLagrangian(CubicGF())
    with pytest.raises(ValueError):
        minimize_path(lagr, 0.0, 0.1, segments=4, start=[0.0, 0.05, 0.04, 0.08, 0.1])


@pytest.mark.parametrize("name", ["cubic", "lazutkin", "cutoff", "shear"])
@given(x=st.floats(0, 1), t=st.floats(0, 1))
def test_momentum_strictly_increasing(genfns, name, x, t):
    g = genfns[name]
    v = np.geomspace(1e-4, 0.3, 25)
    p = InterpolatingLagrangian(g).momentum(np.full_like(v, x), v, np.full_like(v, t))
    assert np.all(np.diff(p) > 0)
    assert np.all(stiffness(g, x, v, t) > 0)


@given(x=st.floats(0, 1), gap=st.floats(1e-3, 0.05), t=st.floats(0.05, 0.95))
def test_straight_lines_are_extremals(genfns, x, gap, t):
    # Euler-Lagrange along x + v t: d/dt L_v = L_x, with v constant
    lagr = InterpolatingLagrangian(genfns["cutoff"])
    v = gap
    h = 1e-4
    pos = lambda s: x + v * s  # noqa: E731
    dLv = (float(lagr.momentum(pos(t + h), v, t + h)) - float(lagr.momentum(pos(t - h), v, t - h))) / (2 * h)
    Lx = float(lagr.dx(pos(t), v, t))
    scale = 3 * genfns["cutoff"].kinetic * v * v
    assert abs(dLv - Lx) < 1e-8 * scale + 1e-16


@given(x=st.floats(0, 1), gap=st.floats(1e-3, 0.1))
def test_straight_line_action_equals_generating_function(genfns, x, gap):
    g = genfns["cutoff"]
    lagr = InterpolatingLagrangian(g)
    nodes = np.linspace(x, x + gap, 9)
    assert path_action(lagr, nodes, gl_order=8) == pytest.approx(float(g(x, x + gap)), rel=1e-9)


def test_kinetic_hamiltonian_helper():
    assert float(kinetic_hamiltonian(2e-4)) == pytest.approx(2 * math.sqrt(2) / 3 * 2e-4**1.5, rel=1e-15)
