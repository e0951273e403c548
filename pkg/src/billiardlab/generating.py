"""Two-point generating functions h(x, X) of twist maps on the Lazutkin annulus.

Every instance exposes ``partials(x, X) -> Partials`` and the coefficient
``kinetic`` of its leading cubic ``kinetic * (X - x)^3``.  Concrete instances:

* :class:`CubicGF`: the integrable ``k (X - x)^3``;
* :class:`LazutkinGF`: the billiard's Lazutkin generating function;
* :class:`CutoffGF`: any base function blended to ``(X - x)^3 / 6`` at large gaps;
* :class:`ShearModifiedGF`: the generating function of ``psi^-k o phi o psi^-k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import bump
from .errors import CoincidentPoints, InversionFail, NoConvergence
from .lazutkin import LazutkinChart, LazutkinState, lazutkin_map, tilde_h
from .partials import Partials

COINCIDENT_TOL = 1e-12
NEWTON_MAXITER = 50


def _gap(x, X):
    x, X = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(X, dtype=float))
    gap = X - x
    if np.any(gap < COINCIDENT_TOL):
        raise CoincidentPoints("generating function needs X > x")
    return x, X, gap


class GeneratingFn:
    """Interface: ``partials(x, X)``, ``kinetic`` and ``max_gap``."""

    kinetic = 1.0 / 6.0
    max_gap = 1.0

    def partials(self, x, X) -> Partials:
        raise NotImplementedError

    def __call__(self, x, X):
        return self.partials(x, X).h

    def d12(self, x, X):
        return self.partials(x, X).h12

    def d12_remainder(self, x, X):
        """``d12 h + 6 k (X - x)``: the mixed partial minus its cubic part."""
        x, X, gap = _gap(x, X)
        return self.d12(x, X) + 6.0 * self.kinetic * gap

    def twist_map(self, x, l):
        """Map generated by h: solve ``-d1 h(x, X) = l`` for X, return (X, d2 h(x, X))."""
        return generated_map(self, x, l)


@dataclass(frozen=True)
class CubicGF(GeneratingFn):
    """``k (X - x)^3``; k = 1/6 is the integrable Lazutkin limit."""

    kinetic: float = 1.0 / 6.0
    max_gap: float = math.inf

    def partials(self, x, X):
        _, _, d = _gap(x, X)
        k = self.kinetic
        return Partials(k * d**3, -3 * k * d**2, 3 * k * d**2, 6 * k * d, -6 * k * d, 6 * k * d)

    def d12_remainder(self, x, X):
        _, _, d = _gap(x, X)
        return np.zeros_like(d)


@dataclass(frozen=True, eq=False)
class LazutkinGF(GeneratingFn):
    chart: LazutkinChart
    kinetic: float = 1.0 / 6.0
    max_gap: float = 1.0

    def partials(self, x, X):
        return tilde_h(self.chart, x, X)


@dataclass(frozen=True, eq=False)
class CutoffGF(GeneratingFn):
    """``D^3/6 + tau(D) (h - D^3/6)`` with ``tau = 1`` on [0, eps], 0 on [sqrt(eps), inf)."""

    base: GeneratingFn
    eps: float
    kinetic: float = 1.0 / 6.0
    max_gap: float = math.inf

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ValueError("cutoff scale must lie in (0, 1)")

    @property
    def outer(self):
        return math.sqrt(self.eps)

    def transition(self, gap, order=0):
        return bump.falling_step(gap, self.eps, self.outer, order)

    def partials(self, x, X):
        x, X, d = _gap(x, X)
        out = [np.empty_like(d) for _ in range(6)]
        cubic = CubicGF().partials(x, X)
        inner = d <= self.eps
        mid = (d > self.eps) & (d < self.outer)
        far = ~(inner | mid)
        for o, c in zip(out, (cubic.h, cubic.h1, cubic.h2, cubic.h11, cubic.h12, cubic.h22)):
            o[far] = c[far]
        if np.any(inner):
            p = self.base.partials(x[inner], X[inner])
            for o, c in zip(out, (p.h, p.h1, p.h2, p.h11, p.h12, p.h22)):
                o[inner] = c
        if np.any(mid):
            dm = d[mid]
            p = self.base.partials(x[mid], X[mid])
            t0, t1, t2 = (self.transition(dm, k) for k in (0, 1, 2))
            R = p.h - dm**3 / 6.0
            R1 = p.h1 + dm**2 / 2.0
            R2 = p.h2 - dm**2 / 2.0
            R11 = p.h11 - dm
            R12 = p.h12 + dm
            R22 = p.h22 - dm
            out[0][mid] = dm**3 / 6.0 + t0 * R
            out[1][mid] = -dm**2 / 2.0 - t1 * R + t0 * R1
            out[2][mid] = dm**2 / 2.0 + t1 * R + t0 * R2
            out[3][mid] = dm + t2 * R - 2.0 * t1 * R1 + t0 * R11
            out[4][mid] = -dm - t2 * R + t1 * (R1 - R2) + t0 * R12
            out[5][mid] = dm + t2 * R + 2.0 * t1 * R2 + t0 * R22
        return Partials(*out)


@dataclass(frozen=True, eq=False)
class ShearModifiedGF(GeneratingFn):
    """Generating function of ``psi^-k o phi o psi^-k`` where ``phi`` is generated by ``base``.

    For target (x, X) the intermediate points (a, b) solve
    ``a + k sqrt(2 l) = x`` and ``b - k sqrt(2 m) = X`` with ``l = -d1 h(a, b)``,
    ``m = d2 h(a, b)``; then ``h_phi = h(a, b) - (sqrt2 k / 3)(l^1.5 + m^1.5)``.
    """

    base: GeneratingFn
    kappa: float
    max_gap: float = 1.0

    @property
    def kinetic(self):
        return 1.0 / (6.0 * (1.0 - 2.0 * self.kappa) ** 2)

    def solve(self, x, X):
        """Intermediate points (a, b) and base partials there."""
        x, X, d = _gap(x, X)
        k = self.kappa
        if k == 0.0:
            return x, X, self.base.partials(x, X)
        g = d / (1.0 - 2.0 * k)
        a = x - k * g
        b = X + k * g
        scale = np.maximum(1.0, np.abs(x))
        for _ in range(NEWTON_MAXITER):
            p = self.base.partials(a, b)
            sl = np.sqrt(2.0 * np.maximum(-p.h1, 0.0))
            sm = np.sqrt(2.0 * np.maximum(p.h2, 0.0))
            f1 = a + k * sl - x
            f2 = b - k * sm - X
            j11 = 1.0 - k * p.h11 / sl
            j12 = -k * p.h12 / sl
            j21 = -k * p.h12 / sm
            j22 = 1.0 - k * p.h22 / sm
            det = j11 * j22 - j12 * j21
            da = (f1 * j22 - f2 * j12) / det
            db = (j11 * f2 - j21 * f1) / det
            a = a - da
            b = b - db
            if np.all(np.abs(da) + np.abs(db) <= 1e-15 * scale):
                return a, b, self.base.partials(a, b)
        raise NoConvergence("shear-modified generating function: Newton did not converge")

    def partials(self, x, X):
        k = self.kappa
        a, b, p = self.solve(x, X)
        if k == 0.0:
            return p
        l = -p.h1
        m = p.h2
        sl = np.sqrt(2.0 * l)
        sm = np.sqrt(2.0 * m)
        j11 = 1.0 - k * p.h11 / sl
        j12 = -k * p.h12 / sl
        j21 = -k * p.h12 / sm
        j22 = 1.0 - k * p.h22 / sm
        det = j11 * j22 - j12 * j21
        # columns of J^-1: d(a,b)/dx and d(a,b)/dX
        ax, bx = j22 / det, -j21 / det
        aX, bX = -j12 / det, j11 / det
        la, lb = -p.h11, -p.h12
        ma, mb = p.h12, p.h22
        h = p.h - (math.sqrt(2.0) * k / 3.0) * (l**1.5 + m**1.5)
        h11 = -(la * ax + lb * bx)
        h12 = -(la * aX + lb * bX)
        h22 = ma * aX + mb * bX
        return Partials(h, -l, m, h11, h12, h22)


# -- maps -------------------------------------------------------------------------------------------

def generated_map(genfn: GeneratingFn, x, l):
    """Twist map of ``genfn``: X solves ``-d1 h(x, X) = l``; returns (X, l+ = d2 h)."""
    x, l = np.broadcast_arrays(np.atleast_1d(np.asarray(x, dtype=float)), np.atleast_1d(np.asarray(l, dtype=float)))
    X = np.empty_like(x)
    k = genfn.kinetic
    for i, (xi, li) in enumerate(zip(x, l)):
        g0 = math.sqrt(li / (3.0 * k))
        f = lambda gap: float(-genfn.partials(xi, xi + gap).h1) - li  # noqa: E731
        lo, hi = 0.5 * g0, 2.0 * g0
        while f(lo) > 0.0:
            lo *= 0.5
        tries = 0
        while f(hi) < 0.0:
            hi *= 1.5
            tries += 1
            if hi >= genfn.max_gap or tries > 60:
                raise InversionFail(f"cannot bracket the image of l={li!r}")
        X[i] = xi + brentq(f, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)
    return X, genfn.partials(x, X).h2


def shear(kappa, x, l):
    """``psi^kappa``: (x, l) -> (x + kappa sqrt(2 l), l)."""
    l = np.asarray(l, dtype=float)
    return np.asarray(x, dtype=float) + kappa * np.sqrt(2.0 * l), l


def shear_action(kappa, l):
    """Generating value ``(sqrt2 kappa / 3) l^1.5`` of ``psi^kappa``."""
    return math.sqrt(2.0) * kappa / 3.0 * np.asarray(l, dtype=float) ** 1.5


def modified_map(chart: LazutkinChart, kappa: float):
    """``psi^-kappa o lazutkin_map o psi^-kappa`` as a callable (x, l) -> (x+, l+)."""

    def step(x, l):
        a, l0 = shear(-kappa, x, l)
        b, m = lazutkin_map(chart, LazutkinState(a, l0))
        return shear(-kappa, b, m)

    return step


def cutoff_generating(chart: LazutkinChart, eps: float) -> CutoffGF:
    return CutoffGF(LazutkinGF(chart), eps)


def modified_generating(chart: LazutkinChart, kappa: float, x, X, eps=None) -> Partials:
    base = LazutkinGF(chart) if eps is None else CutoffGF(LazutkinGF(chart), eps)
    return ShearModifiedGF(base, kappa).partials(x, X)


def twist_constant(genfn: GeneratingFn, gaps, xs=None):
    """Measured ``min -d12 h / (X - x)`` over a grid of positions and gaps."""
    xs = np.linspace(0.0, 1.0, 16, endpoint=False) if xs is None else np.asarray(xs, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    xx, gg = np.meshgrid(xs, gaps, indexing="ij")
    return float(np.min(-genfn.d12(xx.ravel(), (xx + gg).ravel()) / gg.ravel()))
