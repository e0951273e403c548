"""C-infinity bump, its normalised integral (smoothstep) and derived cutoffs."""
from __future__ import annotations

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline


def _raw(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(-1.0 / (1.0 - si * si))
    return out


BUMP_MASS = quad(lambda s: float(_raw(s)), -1.0, 1.0, epsabs=1e-17, epsrel=1e-13, limit=200)[0]


def bump(s):
    """Unit-mass bump supported on (-1, 1)."""
    return _raw(s) / BUMP_MASS


def bump_prime(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    d = 1.0 - si * si
    out[inside] = np.exp(-1.0 / d) * (-2.0 * si / (d * d)) / BUMP_MASS
    return out


def _build_cdf(n=2001, order=12):
    u = np.linspace(-1.0, 1.0, n)
    x, w = np.polynomial.legendre.leggauss(order)
    lo, hi = u[:-1], u[1:]
    pts = 0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * x
    panel = 0.5 * (hi - lo) * (bump(pts) @ w)
    cdf = np.concatenate([[0.0], np.cumsum(panel)])
    cdf /= cdf[-1]
    return CubicHermiteSpline(u, cdf, bump(u))


_CDF = _build_cdf()


def smoothstep(u):
    """Integral of :func:`bump` from -1 to ``u``: 0 for u <= -1, 1 for u >= 1."""
    u = np.asarray(u, dtype=float)
    return np.where(u <= -1.0, 0.0, np.where(u >= 1.0, 1.0, _CDF(np.clip(u, -1.0, 1.0))))


def smoothstep_d(u, order=1):
    """Derivatives of :func:`smoothstep` (exact, from the bump)."""
    if order == 0:
        return smoothstep(u)
    if order == 1:
        return bump(u)
    if order == 2:
        return bump_prime(u)
    raise ValueError("order must be 0, 1 or 2")


def falling_step(t, a, b, order=0):
    """Smooth step equal to 1 for t <= a and 0 for t >= b (and its t-derivatives)."""
    t = np.asarray(t, dtype=float)
    scale = 2.0 / (b - a)
    u = scale * (t - a) - 1.0
    if order == 0:
        return 1.0 - smoothstep(u)
    return -smoothstep_d(u, order) * scale**order


def mollifier(s, width):
    """``bump(s / width) / width``, unit mass on (-width, width)."""
    return bump(np.asarray(s, dtype=float) / width) / width
