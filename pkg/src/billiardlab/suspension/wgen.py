"""Generating functions of suspended flows and the blend of two of them.

For the time-t flow (x, l) -> (X, L) of ``H = K(l) + R`` starting at t = 0,
the type ``w(X, l, t)`` generating function satisfies

    d_X w = L - l,    d_l w = x - X,    d_t w = -H(X, L, t).

It is stored as ``w = -K(l) t + l^2.5 P(X, y, t)`` with y = sqrt(2 l) on a
Fourier x Chebyshev x Chebyshev grid over a time window.  P comes from the
flow data ``Q_l = (x - X + sqrt(2 l) t) / l^1.5`` by the exact radial
integral ``P = 2 int_0^1 u^4 Q_l(X, u y, t) du``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import bump, quadrature
from ..errors import GridTooCoarse
from ..spectral import ChebAxis, FourierAxis, TensorTable
from .flow import flow
from .hamiltonian import SQRT2, SuspendedHamiltonian, kinetic, kinetic_difference, sqrt2_difference

RADIAL_GL = 16
FIXED_POINT_ITERS = 60


def _trig_coef(values):
    """Fourier coefficients of samples along axis 0 (uniform nodes on [0, 1))."""
    n = values.shape[0]
    return FourierAxis(n).analyse(values, 0)


def _trig_eval(coef, x, deriv=0):
    """Evaluate per-column trigonometric series ``coef[:, c]`` at ``x[:, c]``."""
    n2 = coef.shape[0] // 2
    k = np.arange(n2, dtype=float)
    w = 2.0 * np.pi * k
    ph = x[:, None, :] * w[None, :, None]
    a, b = coef[:n2], coef[n2:]
    if deriv == 0:
        return np.sum(a[None] * np.cos(ph) + b[None] * np.sin(ph), axis=1)
    return np.sum(w[None, :, None] * (-a[None] * np.sin(ph) + b[None] * np.cos(ph)), axis=1)


def radial_reduction(ql_table: TensorTable, order=RADIAL_GL):
    """Values of ``P = 2 int_0^1 u^4 Q_l(X, u y, t) du`` on the table's grid."""
    ax, ay, at = ql_table.axes
    gx, gw = quadrature.fixed_gl(order)
    ys = ay.nodes
    pts = np.multiply.outer(ys, gx).ravel()
    vals = ql_table.grid(ax.nodes, pts, at.nodes).reshape(ax.n, ys.size, order, at.n)
    return 2.0 * np.einsum("xygt,g->xyt", vals, gw * gx**4)


@dataclass(frozen=True, eq=False)
class WTable:
    """Tabulated ``w`` on ``t in [ta, tb]`` (see module docstring)."""

    P: TensorTable
    QX: TensorTable
    Ql: TensorTable
    window: tuple

    def _bases(self, X, y, t, pairs):
        ax, ay, at = self.P.axes
        cache = {}
        out = {}
        for dX, dy, dt in pairs:
            key = (dX, dy, dt)
            if ("x", dX) not in cache:
                cache[("x", dX)] = ax.basis(X, dX)
            if ("y", dy) not in cache:
                cache[("y", dy)] = ay.basis(y, dy)
            if ("t", dt) not in cache:
                cache[("t", dt)] = at.basis(np.atleast_1d(t), dt)[0]
            C2 = np.tensordot(self.P.coef, cache[("t", dt)], axes=([2], [0]))
            out[key] = np.sum((cache[("x", dX)] @ C2) * cache[("y", dy)], axis=1)
        return out

    def parts(self, X, l, t, derivs):
        """Derivatives of ``R = l^2.5 P`` for the requested (X-order, l-order, t-order) triples, l-order <= 2."""
        y = np.sqrt(2.0 * l)
        need = set()
        for dX, dl, dt in derivs:
            for dy in range(dl + 1):
                need.add((dX, dy, dt))
        p = self._bases(X, y, t, sorted(need))
        rl = np.sqrt(l)
        out = {}
        for dX, dl, dt in derivs:
            P0 = p[(dX, 0, dt)]
            if dl == 0:
                out[(dX, dl, dt)] = l * l * rl * P0
            elif dl == 1:
                out[(dX, dl, dt)] = 2.5 * l * rl * P0 + l * l / SQRT2 * p[(dX, 1, dt)]
            else:
                out[(dX, dl, dt)] = (3.75 * rl * P0 + 4.5 / SQRT2 * l * p[(dX, 1, dt)]
                                     + 0.5 * l * rl * p[(dX, 2, dt)])
        return out

    def momentum_shift(self, X, l, t):
        """``d_X w = L - l`` from the flow-data table (independent of P)."""
        return l * l * np.sqrt(l) * self.QX(X, np.sqrt(2.0 * l), np.full_like(X, t))


def generating_w(H: SuspendedHamiltonian, window, nx=64, ny=10, nt=12, l_top=1.25e-3,
                 rtol=1e-11, atol=1e-12) -> WTable:
    """Tabulate the generating function of the flow of ``H`` (started at t = 0) on ``window``."""
    ta, tb = window
    y_top = math.sqrt(2.0 * l_top)
    axes = (FourierAxis(nx), ChebAxis(0.0, y_top, ny), ChebAxis(ta, tb, nt))
    x0 = axes[0].nodes
    ys = axes[1].nodes
    tn = axes[2].nodes
    order = np.argsort(tn)
    times = np.concatenate([[0.0], tn[order]])
    XX, YY = np.meshgrid(x0, ys, indexing="ij")
    l0 = 0.5 * YY.ravel() ** 2
    res = flow(H, XX.ravel(), l0, times, rtol=rtol, atol=atol)
    # u, q as (x0, y, t) arrays in table t-node order
    inv = np.empty_like(order)
    inv[order] = np.arange(order.size)
    U = res.u[1:][inv].reshape(nt, nx, ny).transpose(1, 2, 0)
    Qm = res.q[1:][inv].reshape(nt, nx, ny).transpose(1, 2, 0)
    # re-sample on uniform X: x0 = X - sqrt(2 l) t - l^1.5 U(x0)
    l = (0.5 * ys**2)[None, :, None]
    drift = np.sqrt(2.0 * l) * tn[None, None, :]
    scale = l * np.sqrt(l)
    ucoef = _trig_coef(U.reshape(nx, -1))
    qcoef = _trig_coef(Qm.reshape(nx, -1))
    Xg = np.broadcast_to(x0[:, None, None], U.shape)
    base = (Xg - drift).reshape(nx, -1)
    sc = np.broadcast_to(scale, U.shape).reshape(nx, -1)
    x = base.copy()
    for _ in range(FIXED_POINT_ITERS):
        new = base - sc * _trig_eval(ucoef, x)
        if np.max(np.abs(new - x)) <= 1e-16:
            x = new
            break
        x = new
    Ql = -_trig_eval(ucoef, x).reshape(U.shape)
    QX = _trig_eval(qcoef, x).reshape(U.shape)
    ql_table = TensorTable(axes, Ql)
    P = radial_reduction(ql_table)
    return WTable(TensorTable(axes, P), TensorTable(axes, QX), ql_table, (ta, tb))


def identity_residual(wt: WTable, nx=16, ny=6, nt=6):
    """Relative mismatch between ``d_X w`` from P and the flow's ``L - l`` (same grid, off-node)."""
    ax, ay, at = wt.P.axes
    X = (np.arange(nx) + 0.37) / nx
    y = ay.to_phys(np.linspace(-0.9, 0.95, ny))
    ts = at.to_phys(np.linspace(-0.95, 0.9, nt))
    XX, YY = np.meshgrid(X, y, indexing="ij")
    XX, YY = XX.ravel(), YY.ravel()
    l = 0.5 * YY**2
    worst, size = 0.0, 0.0
    for t in ts:
        a = wt.parts(XX, l, t, [(1, 0, 0)])[(1, 0, 0)] / (l * l * np.sqrt(l))
        b = wt.QX(XX, YY, np.full_like(XX, t))
        worst = max(worst, float(np.max(np.abs(a - b))))
        size = max(size, float(np.max(np.abs(b))))
    return worst / max(size, 1e-300)


def reconstruction_residual(wt: WTable, H: SuspendedHamiltonian, nx=16, ny=6, nt=6, tol=None):
    """Compare ``-d_t w`` at (X, l) with the input ``H(X, l + d_X w, t)``.

    Returns ``(relative to H, relative to the remainder of H)``; raises
    :class:`GridTooCoarse` when the first exceeds ``tol``.
    """
    ax, ay, at = wt.P.axes
    X = (np.arange(nx) + 0.37) / nx
    y = ay.to_phys(np.linspace(-0.9, 0.95, ny))
    ts = at.to_phys(np.linspace(-0.95, 0.9, nt))
    XX, YY = np.meshgrid(X, y, indexing="ij")
    XX, YY = XX.ravel(), YY.ravel()
    l = 0.5 * YY**2
    rel_h, rel_r, scale_r = 0.0, 0.0, 0.0
    for t in ts:
        d = wt.parts(XX, l, t, [(0, 0, 1), (1, 0, 0)])
        L = l + d[(1, 0, 0)]
        rec = kinetic(l) - d[(0, 0, 1)]
        Rin = H.remainder(XX, L, t)
        # both sides relative to K(L): rec - K(L) = [K(l) - K(L)] - R_t
        diff = kinetic_difference(l, L) - d[(0, 0, 1)] - Rin
        rel_h = max(rel_h, float(np.max(np.abs(diff) / np.abs(rec))))
        rel_r = max(rel_r, float(np.max(np.abs(diff))))
        scale_r = max(scale_r, float(np.max(np.abs(Rin))))
    rel_r = rel_r / max(scale_r, 1e-300)
    if tol is not None and rel_h > tol:
        raise GridTooCoarse(f"reconstruction residual {rel_h:.3e} exceeds {tol:.1e}")
    return rel_h, rel_r


# -- blended window ---------------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BlendWindow:
    """``w~ = (1 - xi) w_a + xi w_b`` with xi falling from 1 at ``t1`` to 0 at ``t2``.

    At ``t1`` the family is generated by ``w_b`` and at ``t2`` by ``w_a``.
    The blended Hamiltonian is ``-d_t w~`` in the variables (X, L).
    """

    wa: WTable
    wb: WTable
    t1: float
    t2: float
    newton_iters: int = 4

    def xi(self, t, order=0):
        return float(bump.falling_step(t, self.t1, self.t2, order))

    def blended(self, X, l, t, derivs, slope=True):
        """Derivatives of the blended remainder ``R~ = (1 - xi) R_a + xi R_b`` (t-derivatives include xi')."""
        xi = self.xi(t)
        plain = set(derivs)
        extra = set()
        if slope:
            for dX, dl, dt in derivs:
                if dt == 1:
                    extra.add((dX, dl, 0))
        req = sorted(plain | extra)
        a = self.wa.parts(X, l, t, req)
        b = self.wb.parts(X, l, t, req)
        dxi = self.xi(t, 1)
        out = {}
        for key in derivs:
            val = (1.0 - xi) * a[key] + xi * b[key]
            if key[2] == 1 and slope:
                base = (key[0], key[1], 0)
                val = val + dxi * (b[base] - a[base])
            out[key] = val
        return out

    def solve_l(self, X, L, t):
        """Initial action l with ``L = l + d_X w~(X, l, t)``."""
        l = L.copy()
        for _ in range(self.newton_iters):
            d = self.blended(X, l, t, [(1, 0, 0), (1, 1, 0)], slope=False)
            l = l - (l + d[(1, 0, 0)] - L) / (1.0 + d[(1, 1, 0)])
        return np.maximum(l, 0.0)

    def parts(self, X, L, t):
        """``(R, R_X, R_L)`` of ``H~ = -d_t w~`` relative to ``K(L)``."""
        l = self.solve_l(X, L, t)
        d = self.blended(X, l, t, [(0, 0, 1), (0, 1, 1), (1, 0, 1), (1, 1, 0), (2, 0, 0)])
        Rt, Rtl, RtX = d[(0, 0, 1)], d[(0, 1, 1)], d[(1, 0, 1)]
        RXl, RXX = d[(1, 1, 0)], d[(2, 0, 0)]
        R = kinetic_difference(l, L) - Rt
        den = 1.0 + RXl
        # H_L = (sqrt(2l) - R_tl) / (1 + R_Xl); subtract sqrt(2L) without cancellation
        RL = (sqrt2_difference(l, L) - Rtl - np.sqrt(2.0 * L) * RXl) / den
        HL = (np.sqrt(2.0 * l) - Rtl) / den
        RX = -RtX - HL * RXX
        return R, RX, RL

    def convexity(self, X, l, t):
        """``(ratio, exact)`` at initial action l.

        ratio = -(w~_tll) / (1 + w~_Xl) (the sufficient condition compares it
        with 1 / (2 sqrt l)); exact = d^2 H~ / dL^2.
        """
        d = self.blended(X, l, t, [(0, 1, 1), (0, 2, 1), (1, 1, 0), (1, 2, 0)])
        rl = np.sqrt(2.0 * l)
        Wtl = -rl + d[(0, 1, 1)]
        Wtll = -1.0 / rl + d[(0, 2, 1)]
        WXl = d[(1, 1, 0)]
        WXll = d[(1, 2, 0)]
        ratio = -Wtll / (1.0 + WXl)
        exact = (-Wtll * (1.0 + WXl) + Wtl * WXll) / (1.0 + WXl) ** 3
        return ratio, exact
