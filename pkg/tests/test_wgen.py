import math

import numpy as np
import pytest

from billiardlab.suspension.flow import flow
from billiardlab.suspension.hamiltonian import KineticHamiltonian, kinetic
from billiardlab.suspension.wgen import BlendWindow, generating_w, identity_residual

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def kinetic_table():
    return generating_w(KineticHamiltonian(), (0.2, 0.25), nx=8, ny=6, nt=6)


def test_kinetic_generating_function_is_exact(kinetic_table):
    X = np.linspace(0, 1, 7)
    for l in (0.0, 1e-6, 1e-3):
        ll = np.full_like(X, l)
        for t in (0.2, 0.23, 0.25):
            R = kinetic_table.parts(X, ll, t, [(0, 0, 0)])[(0, 0, 0)]
            np.testing.assert_array_equal(R, 0.0)
            w = -kinetic(ll) * t + R
            np.testing.assert_allclose(w, -(2 * math.sqrt(2) / 3) * ll**1.5 * t, rtol=1e-15)


def test_kinetic_blend_convexity_ratio(kinetic_table):
    win = BlendWindow(kinetic_table, kinetic_table, 0.2, 0.25)
    l = np.geomspace(1e-7, 1e-3, 9)
    ratio, exact = win.convexity(np.zeros_like(l), l, 0.22)
    # w = -K(l) t gives -w_tll = K''(l) = 1 / sqrt(2 l)
    np.testing.assert_allclose(ratio, 1 / np.sqrt(2 * l), rtol=1e-12)
    np.testing.assert_allclose(exact, 1 / np.sqrt(2 * l), rtol=1e-12)


def test_zero_action_row_vanishes(oval_suspension):
    wt = oval_suspension.smoothed.window.wa
    X = np.linspace(0, 1, 5)
    out = wt.parts(X, np.zeros_like(X), 0.25, [(0, 0, 0), (1, 0, 0)])
    np.testing.assert_array_equal(out[(0, 0, 0)], 0.0)
    np.testing.assert_array_equal(out[(1, 0, 0)], 0.0)


def test_action_derivative_against_flow(oval_suspension):
    H = oval_suspension.hhat
    wt = oval_suspension.smoothed.window.wa
    ta, tb = wt.window
    t = 0.5 * (ta + tb)
    x0 = np.array([0.13, 0.42, 0.77])
    l0 = np.array([1e-5, 1e-4, 1e-3])
    r = flow(H, x0, l0, np.array([0.0, t]))
    X = r.x[-1]
    d = wt.parts(X % 1.0, l0, t, [(0, 1, 0), (1, 0, 0)])
    w_l = -np.sqrt(2 * l0) * t + d[(0, 1, 0)]
    np.testing.assert_allclose(w_l, x0 - X, atol=1e-6)
    assert np.all(np.abs(d[(1, 0, 0)] - (r.l[-1] - l0)) <= 1e-4 * l0**2.5)


def test_identity_residuals_small(oval_suspension):
    diag = oval_suspension.smoothed.diagnostics["generating"]
    assert set(diag) == {"w_hat", "w_star", "k_hat", "k_star"}
    for d in diag.values():
        assert d["identity_residual"] < 1e-5
        assert d["reconstruction_rel_H"] < oval_suspension.config.recon_tol
    assert identity_residual(oval_suspension.smoothed.window.wb) < 1e-5
