"""Time-dependent Hamiltonians on the annulus, written as ``speed * K(l) + R(x, l, t)``.

``K(l) = (2 sqrt2 / 3) l^1.5`` is the integrable part and R the remainder.
Table-backed remainders have the form ``R = l^2.5 V(x, y, t)`` with
``y = sqrt(2 l)``, which keeps them smooth down to the wall ``l = 0``.
All evaluators take arrays ``x, l`` and a scalar time ``t``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import bump, quadrature
from ..errors import ConfigError
from ..spectral import ChebAxis, FourierAxis, TensorTable
from .config import SuspensionConfig
from .lagrangian import InterpolatingLagrangian, legendre_hamiltonian

SQRT2 = math.sqrt(2.0)


def kinetic(l):
    """``K(l) = (2 sqrt2 / 3) l^1.5``."""
    l = np.asarray(l, dtype=float)
    return (2.0 * SQRT2 / 3.0) * l * np.sqrt(l)


def kinetic_difference(l, L):
    """``K(l) - K(L)`` without cancellation."""
    rl, rL = np.sqrt(l), np.sqrt(L)
    den = np.where(rl + rL > 0.0, rl + rL, 1.0)
    return (2.0 * SQRT2 / 3.0) * (l - L) * (l + rl * rL + L) / den


def sqrt2_difference(l, L):
    """``sqrt(2 l) - sqrt(2 L)`` without cancellation."""
    den = np.sqrt(2.0 * l) + np.sqrt(2.0 * L)
    return 2.0 * (l - L) / np.where(den > 0.0, den, 1.0)


def potential_parts(l, V, Vx, Vy):
    """Remainder ``l^2.5 V`` and its x and l derivatives."""
    l15 = l * np.sqrt(l)
    return l15 * l * V, l15 * l * Vx, 2.5 * l15 * V + l * l / SQRT2 * Vy


class SuspendedHamiltonian:
    """Interface: ``parts(x, l, t) -> (R, R_x, R_l)`` for l >= 0."""

    speed = 1.0
    breakpoints: tuple = ()
    mode = "generic"

    def parts(self, x, l, t):
        raise NotImplementedError

    def _signed(self, x, l, t):
        shape = np.broadcast_shapes(np.shape(x), np.shape(l))
        x, l = np.broadcast_arrays(np.atleast_1d(np.asarray(x, dtype=float)), np.atleast_1d(np.asarray(l, dtype=float)))
        a = np.abs(l)
        R, Rx, Rl = self.parts(x, a, float(t))
        return shape, a, np.sign(l), R, Rx, Rl

    def __call__(self, x, l, t):
        """H(x, l, t), extended evenly to l < 0."""
        shape, a, _, R, _, _ = self._signed(x, l, t)
        return (self.speed * kinetic(a) + R).reshape(shape)

    def remainder(self, x, l, t):
        shape, _, _, R, _, _ = self._signed(x, l, t)
        return R.reshape(shape)

    def dx(self, x, l, t):
        shape, _, _, _, Rx, _ = self._signed(x, l, t)
        return Rx.reshape(shape)

    def dl(self, x, l, t):
        shape, a, sg, _, _, Rl = self._signed(x, l, t)
        return (sg * (self.speed * np.sqrt(2.0 * a) + Rl)).reshape(shape)


class KineticHamiltonian(SuspendedHamiltonian):
    mode = "kinetic"

    def __init__(self, speed=1.0):
        self.speed = speed

    def parts(self, x, l, t):
        z = np.zeros_like(l)
        return z, z.copy(), z.copy()


class DirectHamiltonian(SuspendedHamiltonian):
    """Legendre dual of an interpolating Lagrangian, evaluated pointwise (no tables).

    Its time-one flow is the twist map of the generating function; ``speed``
    is ``sqrt(1 / 6k)`` for the cubic coefficient k.  The x-derivative comes
    from a finite difference of a rounding-limited remainder, so this class
    is a pointwise reference; flows should use :class:`TableHamiltonian`.
    """

    mode = "direct"

    def __init__(self, lagr: InterpolatingLagrangian, tol=1e-14):
        self.lagr = lagr
        self.tol = tol
        self.speed = math.sqrt(1.0 / (6.0 * lagr.kinetic))

    def parts(self, x, l, t):
        tt = np.full_like(l, t)
        res = legendre_hamiltonian(self.lagr, x, l, tt, tol=self.tol)
        Rx = -self.lagr.dx(x, res.v, tt)
        return res.remainder, Rx, res.offset


# -- spectral remainder tables ----------------------------------------------------------------------

def _table_potential(table: TensorTable, x, y, tvec):
    """V, V_x, V_y of a (Fourier x, Chebyshev y, Chebyshev t) table at a shared time basis ``tvec``."""
    ax, ay, _ = table.axes
    C2 = np.tensordot(table.coef, tvec, axes=([2], [0]))
    bx, dbx = ax.basis(x), ax.basis(x, 1)
    by, dby = ay.basis(y), ay.basis(y, 1)
    bxC = bx @ C2
    V = np.sum(bxC * by, axis=1)
    Vx = np.sum((dbx @ C2) * by, axis=1)
    Vy = np.sum(bxC * dby, axis=1)
    return V, Vx, Vy


@dataclass(frozen=True, eq=False)
class RemainderTable:
    """``G(x, y, tau) = (H'(x, l, tau) - c K(l)) / l^2.5`` on a spectral grid, y = sqrt(2 l)."""

    table: TensorTable
    speed: float
    y_top: float

    @property
    def l_top(self):
        return 0.5 * self.y_top**2

    def time_basis(self, tau):
        return self.table.axes[2].basis(np.atleast_1d(tau))[0]

    def potential(self, x, y, tvec):
        return _table_potential(self.table, x, y, tvec)

    def reflected(self):
        """Table of ``G(-x, y, 1 - tau)``."""
        return RemainderTable(self.table.reflected(0).reflected(2), self.speed, self.y_top)


def build_remainder_table(lagr: InterpolatingLagrangian, config: SuspensionConfig) -> RemainderTable:
    """Tabulate the Legendre remainder of ``lagr`` over x, sqrt(2 l) in [0, y_top] and tau in [0, 1]."""
    y_top = math.sqrt(2.0 * config.l_top)
    axes = (FourierAxis(config.h_nx), ChebAxis(0.0, y_top, config.h_ny), ChebAxis(0.0, 1.0, config.h_nt))
    X, Y, T = np.meshgrid(*[a.nodes for a in axes], indexing="ij")
    l = 0.5 * Y**2
    res = legendre_hamiltonian(lagr, X.ravel(), l.ravel(), T.ravel(), tol=config.legendre_tol)
    G = res.remainder.reshape(X.shape) / l**2.5
    speed = math.sqrt(1.0 / (6.0 * lagr.kinetic))
    return RemainderTable(TensorTable(axes, G), speed, y_top)


class TableHamiltonian(SuspendedHamiltonian):
    """``c K(l) + l^2.5 G(x, y, t)`` on t in [0, 1]: the tabulated Legendre dual."""

    mode = "nonperiodic"

    def __init__(self, rt: RemainderTable):
        self.rt = rt
        self.speed = rt.speed

    def parts(self, x, l, t):
        V, Vx, Vy = self.rt.potential(x, np.sqrt(2.0 * l), self.rt.time_basis(t))
        return potential_parts(l, V, Vx, Vy)


class PiecewiseHamiltonian(SuspendedHamiltonian):
    """Kinetic on [0, kappa) and (1 - kappa, 1]; the time-rescaled table in between."""

    mode = "piecewise"

    def __init__(self, rt: RemainderTable, kappa: float):
        c = 1.0 - 2.0 * kappa
        if abs(rt.speed - c) > 1e-12:
            raise ConfigError("remainder table was built for a different shear time")
        self.rt = rt
        self.kappa = kappa
        self.c = c
        self.breakpoints = (kappa, 1.0 - kappa)

    def active(self, t):
        return self.kappa <= t <= 1.0 - self.kappa

    def time_vector(self, t):
        """Shared time basis including the ``1 / c`` rescaling (zero outside the middle window)."""
        if not self.active(t):
            return None
        return self.rt.time_basis((t - self.kappa) / self.c) / self.c

    def parts(self, x, l, t):
        tv = self.time_vector(t)
        if tv is None:
            z = np.zeros_like(l)
            return z, z.copy(), z.copy()
        return potential_parts(l, *self.rt.potential(x, np.sqrt(2.0 * l), tv))

    def reflected(self):
        """``K(X, P, s) = H(-X, P, 1 - s)``."""
        return PiecewiseHamiltonian(self.rt.reflected(), self.kappa)


class MollifiedHamiltonian(SuspendedHamiltonian):
    """Time mollification of a :class:`PiecewiseHamiltonian` with a bump of half-width ``m``.

    The mollifier acts only on the Chebyshev time factor, so each time needs
    one small batch of one-dimensional integrals.
    """

    mode = "mollified"

    def __init__(self, base: PiecewiseHamiltonian, m: float, rtol=1e-13):
        self.base = base
        self.m = m
        self.rtol = rtol
        k = base.kappa
        self.breakpoints = ()
        self.support = (k - m, 1.0 - k + m)

    def time_vector(self, t):
        b, m, k, c = self.base, self.m, self.base.kappa, self.base.c
        lo = max(-m, t - (1.0 - k))
        hi = min(m, t - k)
        n = b.rt.table.axes[2].n
        if hi <= lo:
            return None
        ax = b.rt.table.axes[2]

        def f(s, idx):
            tau = (t - s - k) / c
            rows = ax.basis(tau)
            return rows[np.arange(s.size), idx] * bump.bump(s / m) / m

        vec = quadrature.integrate(f, np.full(n, lo), np.full(n, hi), rtol=self.rtol, atol=1e-16)
        return vec / c

    def parts(self, x, l, t):
        tv = self.time_vector(t)
        if tv is None:
            z = np.zeros_like(l)
            return z, z.copy(), z.copy()
        return potential_parts(l, *self.base.rt.potential(x, np.sqrt(2.0 * l), tv))

    def reflected(self):
        return MollifiedHamiltonian(self.base.reflected(), self.m, self.rtol)


def mollifier_drift(hhat: PiecewiseHamiltonian, m: float, xs, ys, ts):
    """``sup |V* - V^|`` over a grid, at times where V^ is smooth on the mollifier support."""
    hstar = MollifiedHamiltonian(hhat, m)
    worst = 0.0
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    X, Y = X.ravel(), Y.ravel()
    for t in ts:
        a, b = hhat.time_vector(t), hstar.time_vector(t)
        va = 0.0 if a is None else hhat.rt.potential(X, Y, a)[0]
        vb = 0.0 if b is None else hhat.rt.potential(X, Y, b)[0]
        worst = max(worst, float(np.max(np.abs(np.asarray(vb) - np.asarray(va)))))
    return worst
