"""Time-dependent interpolating Lagrangian of a generating function and its Legendre dual.

For a generating function h with ``d12 h < 0`` define

    L(x, v, t) = -int_0^v (v - eta) d12 h(x - eta t, x + eta (1 - t)) d eta.

Straight lines ``x + v t`` are extremals of L and their action over [0, 1]
equals h(x, x + v).  With ``d12 h = -6 k D + R(D)`` the cubic part integrates
to ``k v^3`` exactly and only the remainder R goes through quadrature, which
keeps the small non-integrable part free of cancellation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .. import quadrature
from ..errors import InversionFail, NoConvergence
from ..generating import GeneratingFn

FD_STEP = 1e-3
NOISE_FLOOR = 1e-13
ABS_NOISE = 4e-15
LEGENDRE_MAXITER = 60


def _args(*arrays):
    shape = np.broadcast_shapes(*[np.shape(a) for a in arrays])
    out = np.broadcast_arrays(*[np.atleast_1d(np.asarray(a, dtype=float)) for a in arrays])
    return [a.ravel() for a in out], shape


@dataclass(frozen=True, eq=False)
class InterpolatingLagrangian:
    genfn: GeneratingFn
    rtol: float = 1e-12

    @property
    def kinetic(self):
        return self.genfn.kinetic

    def _remainder_integral(self, x, v, t, weight, dx=0.0):
        """``int_0^1 weight(u) R(x + dx - v u t, x + dx + v u (1 - t)) du`` for v > 0."""
        out = np.zeros_like(v)
        live = v > 0.0
        if not np.any(live):
            return out
        xl, vl, tl = x[live], v[live], t[live]

        def f(u, idx):
            a = xl[idx] + dx - vl[idx] * u * tl[idx]
            b = xl[idx] + dx + vl[idx] * u * (1.0 - tl[idx])
            return weight(u) * self.genfn.d12_remainder(a, b)

        n = xl.size
        # R is a small difference of O(v) terms evaluated at points known to
        # about one ulp of x: below this floor it is rounding noise
        floor = NOISE_FLOOR * 6.0 * self.kinetic * vl + ABS_NOISE * np.maximum(1.0, np.abs(xl))
        out[live] = quadrature.integrate(f, np.zeros(n), np.ones(n), rtol=self.rtol, atol=floor)
        return out

    def remainder(self, x, v, t):
        """``L - k v^3``."""
        (x, v, t), shape = _args(x, v, t)
        return (-v * v * self._remainder_integral(x, v, t, lambda u: 1.0 - u)).reshape(shape)

    def __call__(self, x, v, t):
        (x, v, t), shape = _args(x, v, t)
        return (self.kinetic * v**3).reshape(shape) + self.remainder(x, v, t).reshape(shape)

    def momentum_remainder(self, x, v, t):
        (x, v, t), shape = _args(x, v, t)
        return (-v * self._remainder_integral(x, v, t, lambda u: np.ones_like(u))).reshape(shape)

    def momentum(self, x, v, t):
        """``d L / d v``."""
        (x, v, t), shape = _args(x, v, t)
        return (3.0 * self.kinetic * v * v).reshape(shape) + self.momentum_remainder(x, v, t).reshape(shape)

    def stiffness(self, x, v, t):
        """``d^2 L / d v^2 = -d12 h(x - v t, x + v (1 - t))``."""
        (x, v, t), shape = _args(x, v, t)
        out = 6.0 * self.kinetic * v
        live = v > 0.0
        if np.any(live):
            a = x[live] - v[live] * t[live]
            b = x[live] + v[live] * (1.0 - t[live])
            out[live] -= self.genfn.d12_remainder(a, b)
        return out.reshape(shape)

    def _dx_integral(self, x, v, t, weight):
        # fourth-order central difference of R under a common shift of both arguments
        h = FD_STEP
        terms = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)]
        acc = np.zeros_like(v)
        for k, c in terms:
            acc += c * self._remainder_integral(x, v, t, weight, dx=k * h)
        return acc / (12.0 * h)

    def dx(self, x, v, t):
        """``d L / d x`` (the cubic part does not depend on x)."""
        (x, v, t), shape = _args(x, v, t)
        return (-v * v * self._dx_integral(x, v, t, lambda u: 1.0 - u)).reshape(shape)

    def dxv(self, x, v, t):
        """``d^2 L / dx dv``."""
        (x, v, t), shape = _args(x, v, t)
        return (-v * self._dx_integral(x, v, t, lambda u: np.ones_like(u))).reshape(shape)


def lagrangian(genfn: GeneratingFn, x, v, t, rtol=1e-12):
    """``L(x, v, t)`` of the interpolating Lagrangian of ``genfn``."""
    return InterpolatingLagrangian(genfn, rtol)(x, v, t)


def momentum(genfn: GeneratingFn, x, v, t, rtol=1e-12):
    return InterpolatingLagrangian(genfn, rtol).momentum(x, v, t)


def stiffness(genfn: GeneratingFn, x, v, t):
    return InterpolatingLagrangian(genfn).stiffness(x, v, t)


# -- Legendre transform -----------------------------------------------------------------------------

@dataclass(frozen=True)
class LegendreResult:
    """``H = max_v (v l - L)``, the maximiser ``v``, ``H - H0`` with H0 the cubic part's dual
    and ``offset = v - v0`` (which equals ``dH/dl - dH0/dl``)."""

    H: np.ndarray
    v: np.ndarray
    remainder: np.ndarray
    offset: np.ndarray


def kinetic_hamiltonian(l, kinetic=1.0 / 6.0):
    """Legendre dual ``(2/3) l sqrt(l / 3k)`` of ``k v^3``."""
    l = np.asarray(l, dtype=float)
    return (2.0 / 3.0) * l * np.sqrt(l / (3.0 * kinetic))


def legendre_hamiltonian(lagr: InterpolatingLagrangian, x, l, t, tol=1e-14):
    """Solve ``L_v(x, v, t) = l`` for v > 0 and return :class:`LegendreResult`.

    The unknown is the offset ``d = v - v0`` from the cubic optimum
    ``v0 = sqrt(l / 3k)``; safeguarded Newton on the monotone ``L_v``.
    Raises :class:`InversionFail` when the root leaves the generating
    function's domain or Newton stalls.
    """
    (x, l, t), shape = _args(x, l, t)
    if np.any(l < 0.0):
        raise InversionFail("Legendre inversion needs l >= 0")
    k = lagr.kinetic
    v0 = np.sqrt(l / (3.0 * k))
    d = np.zeros_like(l)
    lo = np.full_like(l, -np.inf)
    hi = np.full_like(l, np.inf)
    live = v0 > 0.0
    for _ in range(LEGENDRE_MAXITER):
        idx = np.flatnonzero(live)
        if idx.size == 0:
            break
        v = v0[idx] + d[idx]
        if np.any(v >= lagr.genfn.max_gap):
            raise InversionFail("Legendre maximiser left the domain of the generating function")
        g = 3.0 * k * d[idx] * (2.0 * v0[idx] + d[idx]) + lagr.momentum_remainder(x[idx], v, t[idx])
        gp = lagr.stiffness(x[idx], v, t[idx])
        lo[idx] = np.where(g < 0.0, np.maximum(lo[idx], d[idx]), lo[idx])
        hi[idx] = np.where(g > 0.0, np.minimum(hi[idx], d[idx]), hi[idx])
        step = np.where(gp > 0.0, g / np.where(gp > 0.0, gp, 1.0), np.nan)
        new = d[idx] - step
        # safeguards: keep v positive, bisect whenever Newton leaves the bracket
        bad = ~np.isfinite(new) | (new <= lo[idx]) | (new >= hi[idx]) | (v0[idx] + new <= 0.0)
        both = np.isfinite(lo[idx]) & np.isfinite(hi[idx])
        mid = 0.5 * (np.where(both, lo[idx], 0.0) + np.where(both, hi[idx], 0.0))
        new = np.where(bad & both, mid, new)
        new = np.where(bad & ~both & (g > 0.0), 0.5 * (d[idx] - v0[idx]), new)
        new = np.where(bad & ~both & (g <= 0.0), d[idx] + v0[idx], new)
        done = np.abs(new - d[idx]) <= tol * v0[idx]
        d[idx] = new
        live[idx[done]] = False
    else:
        raise InversionFail("Legendre inversion did not converge")
    v = v0 + d
    Lr = lagr.remainder(x, v, t)
    rem = -k * d * d * (3.0 * v0 + d) - Lr
    H = kinetic_hamiltonian(l, k) + rem
    return LegendreResult(H.reshape(shape), v.reshape(shape), rem.reshape(shape), d.reshape(shape))


# -- discrete path minimisation ---------------------------------------------------------------------

@dataclass(frozen=True)
class PathResult:
    action: float
    nodes: np.ndarray
    deviation: float
    iterations: int


def path_action(lagr: InterpolatingLagrangian, nodes, gl_order=4, grad=False):
    """Action of the piecewise-linear path through ``nodes`` at equally spaced times in [0, 1]."""
    nodes = np.asarray(nodes, dtype=float)
    n = nodes.size - 1
    gx, gw = quadrature.fixed_gl(gl_order)
    a, b = nodes[:-1, None], nodes[1:, None]
    s = gx[None, :]
    pos = a + (b - a) * s
    vel = np.broadcast_to((b - a) * n, pos.shape)
    tt = (np.arange(n)[:, None] + s) / n
    L = lagr(pos.ravel(), vel.ravel(), tt.ravel()).reshape(pos.shape)
    action = float(np.sum(L * gw) / n)
    if not grad:
        return action
    Lx = lagr.dx(pos.ravel(), vel.ravel(), tt.ravel()).reshape(pos.shape)
    Lv = lagr.momentum(pos.ravel(), vel.ravel(), tt.ravel()).reshape(pos.shape)
    da = np.sum((Lx * (1.0 - s) - Lv * n) * gw, axis=1) / n
    db = np.sum((Lx * s + Lv * n) * gw, axis=1) / n
    g = np.zeros(n + 1)
    g[:-1] += da
    g[1:] += db
    return action, g[1:-1]


def minimize_path(lagr: InterpolatingLagrangian, x, X, segments=50, gl_order=4, start=None,
                  tol=1e-12, maxiter=50):
    """Minimise the discrete action over piecewise-linear paths from x to X.

    Damped Newton on the interior nodes with a tridiagonal Hessian from
    three coloured gradient differences; the Hessian is refreshed when a
    full step fails or the steps stop shrinking quickly.  ``deviation`` is the largest
    distance of a node from the straight line.  The Lagrangian lives on v > 0, so
    nodes must stay strictly increasing; trial steps that break the order are damped.
    """
    times = np.linspace(0.0, 1.0, segments + 1)
    line = x + (X - x) * times
    nodes = line.copy() if start is None else np.asarray(start, dtype=float).copy()
    nodes[0], nodes[-1] = x, X
    if np.any(np.diff(nodes) <= 0.0):
        raise ValueError("path nodes must be strictly increasing")
    span = abs(X - x)
    fd = 1e-6 * span
    m = segments - 1

    def hessian(nodes, g):
        band = np.zeros((3, m))
        for colour in range(3):
            pert = nodes.copy()
            sel = np.arange(colour, m, 3)
            pert[1 + sel] += fd
            _, gp = path_action(lagr, pert, gl_order, grad=True)
            dg = (gp - g) / fd
            band[1, sel] = dg[sel]
            up = sel[sel + 1 < m]
            band[2, up] = dg[up + 1]  # H[j+1, j]
            dn = sel[sel - 1 >= 0]
            band[0, dn] = dg[dn - 1]  # H[j-1, j]
        return band

    band = None
    last = np.inf
    for it in range(1, maxiter + 1):
        A, g = path_action(lagr, nodes, gl_order, grad=True)
        if band is None:
            band = hessian(nodes, g)
        step = solve_banded((1, 1), band, g)
        lam = 1.0
        while True:
            trial = nodes.copy()
            trial[1:-1] -= lam * step
            ordered = np.all(np.diff(trial) > 0.0)
            if (ordered and path_action(lagr, trial, gl_order) <= A + 1e-15 * abs(A)) or lam < 1e-6:
                break
            lam *= 0.5
        if not ordered:
            raise NoConvergence("path minimisation could not keep the nodes ordered")
        size = np.max(np.abs(lam * step))
        if lam < 1.0 or size > 0.05 * last:
            band = None
        last = size
        nodes = trial
        if size <= tol * max(span, 1.0):
            A = path_action(lagr, nodes, gl_order)
            return PathResult(A, nodes, float(np.max(np.abs(nodes - line))), it)
    raise NoConvergence("path minimisation did not converge")
