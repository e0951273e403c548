"""Pure-Python (numpy) implementations of the hot geometric kernels.

Every function here has a twin with the same signature in the compiled
``_ckernels`` extension.  Inputs are 1-D float64 arrays (broadcast against
each other where it makes sense); outputs are float64 arrays.

A boundary is described by the Fourier coefficients ``rc, rs`` of its radius
of curvature ``r(theta)`` as a function of the outward-normal angle, so that

    r(theta) = sum_k rc[k] cos(k theta) + rs[k] sin(k theta),   rc[1] = rs[1] = 0.
"""
from __future__ import annotations

import numpy as np

_GL_N = 20
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_N)
# phase span (max harmonic + 1) * gap below which chord integrals use Gauss-Legendre
GL_SPAN = 6.0
NEWTON_MAXITER = 100


def series(c, s, theta, deriv=0):
    """Evaluate ``sum c_k cos(k t) + s_k sin(k t)`` or its ``deriv``-th derivative."""
    c = np.asarray(c, dtype=float)
    s = np.asarray(s, dtype=float)
    theta = np.asarray(theta, dtype=float)
    k = np.arange(len(c), dtype=float)
    kt = np.multiply.outer(theta, k)
    cos_kt, sin_kt = np.cos(kt), np.sin(kt)
    if deriv == 0:
        return cos_kt @ c + sin_kt @ s
    # d/dt cos = -k sin, d/dt sin = k cos; cycle of period 4
    kd = k**deriv
    m = deriv % 4
    if m == 1:
        return cos_kt @ (s * kd) - sin_kt @ (c * kd)
    if m == 2:
        return -(cos_kt @ (c * kd)) - sin_kt @ (s * kd)
    if m == 3:
        return sin_kt @ (c * kd) - cos_kt @ (s * kd)
    return cos_kt @ (c * kd) + sin_kt @ (s * kd)


def integrated(c, s, theta):
    """Antiderivative of :func:`series` vanishing at ``theta = 0``."""
    c = np.asarray(c, dtype=float)
    s = np.asarray(s, dtype=float)
    theta = np.asarray(theta, dtype=float)
    k = np.arange(1, len(c), dtype=float)
    kt = np.multiply.outer(theta, k)
    # 1 - cos(kt) written as 2 sin^2(kt/2) to keep small-angle accuracy
    return c[0] * theta + np.sin(kt) @ (c[1:] / k) + (2.0 * np.sin(0.5 * kt) ** 2) @ (s[1:] / k)


def invert_integrated(c, s, target):
    """Solve ``integrated(c, s, theta) = target`` for theta (integrand positive)."""
    c = np.asarray(c, dtype=float)
    s = np.asarray(s, dtype=float)
    target = np.atleast_1d(np.asarray(target, dtype=float))
    k = np.arange(1, len(c), dtype=float)
    bound = 2.0 * np.sum((np.abs(c[1:]) + np.abs(s[1:])) / k) if len(k) else 0.0
    lo = (target - bound) / c[0] - 1e-12
    hi = (target + bound) / c[0] + 1e-12
    theta = target / c[0]
    for _ in range(NEWTON_MAXITER):
        f = integrated(c, s, theta) - target
        lo = np.where(f < 0, theta, lo)
        hi = np.where(f > 0, theta, hi)
        step = f / series(c, s, theta)
        new = theta - step
        bad = (new <= lo) | (new >= hi)
        new = np.where(bad, 0.5 * (lo + hi), new)
        done = np.abs(new - theta) <= 4e-16 * np.maximum(1.0, np.abs(theta))
        theta = new
        if np.all(done):
            break
    return theta


def _closed_form_parts(c, s, phase_mult, phi0, p_sign, delta):
    """Closed-form integrals of r(phi0/k + p w) against cos w, sin w over [0, delta].

    Returns (int r cos w, int r sin w) where the integrand harmonic k has phase
    ``k*phi0`` and frequency ``p_sign*k`` in w.
    """
    k = np.arange(len(c), dtype=float)
    phase = np.multiply.outer(phi0, k)  # k * phi0
    p = p_sign * k
    d = delta[:, None]

    def icos(m):
        # int_0^d cos(phase + m w) dw
        with np.errstate(divide="ignore", invalid="ignore"):
            out = 2.0 * np.cos(phase + 0.5 * m * d) * np.sin(0.5 * m * d) / m
        return np.where(m == 0, d * np.cos(phase), out)

    def isin(m):
        with np.errstate(divide="ignore", invalid="ignore"):
            out = 2.0 * np.sin(phase + 0.5 * m * d) * np.sin(0.5 * m * d) / m
        return np.where(m == 0, d * np.sin(phase), out)

    mp = np.broadcast_to(p + 1.0, phase.shape)
    mm = np.broadcast_to(p - 1.0, phase.shape)
    ic_p, ic_m = icos(mp), icos(mm)
    is_p, is_m = isin(mp), isin(mm)
    cos_cos = 0.5 * (ic_p + ic_m)
    cos_sin = 0.5 * (is_p - is_m)
    sin_cos = 0.5 * (is_p + is_m)
    sin_sin = 0.5 * (ic_m - ic_p)
    a = cos_cos @ c + sin_cos @ s
    b = cos_sin @ c + sin_sin @ s
    return a, b


def chord(rc, rs, theta, delta):
    """Chord integrals between normal angles ``theta`` and ``theta + delta``.

    Returns ``(A, B, C, Ap, Bp)`` with

        A  = int_0^d r(theta + w) cos w dw        B  = int_0^d r(theta + w) sin w dw
        C  = int_0^d r(theta + w) (1 - cos w) dw
        Ap = int_0^d r(theta + d - w) cos w dw    Bp = int_0^d r(theta + d - w) sin w dw

    so that the chord length is hypot(A, B), the departure angle atan2(B, A),
    the arrival angle atan2(Bp, Ap) and the arc length A + C.
    """
    rc = np.asarray(rc, dtype=float)
    rs = np.asarray(rs, dtype=float)
    theta, delta = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(delta, dtype=float))
    theta = np.ravel(theta)
    delta = np.ravel(delta)
    kmax = len(rc) - 1
    use_gl = (kmax + 1.0) * np.abs(delta) <= GL_SPAN
    A = np.empty_like(theta)
    B = np.empty_like(theta)
    C = np.empty_like(theta)
    Ap = np.empty_like(theta)
    Bp = np.empty_like(theta)
    if np.any(use_gl):
        th = theta[use_gl]
        d = delta[use_gl]
        w = 0.5 * np.multiply.outer(d, _GL_X + 1.0)
        wt = 0.5 * np.multiply.outer(d, _GL_W)
        r = series(rc, rs, th[:, None] + w)
        r_rev = r[:, ::-1]
        cw, sw = np.cos(w), np.sin(w)
        A[use_gl] = np.sum(wt * r * cw, axis=1)
        B[use_gl] = np.sum(wt * r * sw, axis=1)
        C[use_gl] = np.sum(wt * r * 2.0 * np.sin(0.5 * w) ** 2, axis=1)
        Ap[use_gl] = np.sum(wt * r_rev * cw, axis=1)
        Bp[use_gl] = np.sum(wt * r_rev * sw, axis=1)
    big = ~use_gl
    if np.any(big):
        th = theta[big]
        d = delta[big]
        a, b = _closed_form_parts(rc, rs, None, th, 1.0, d)
        ap, bp = _closed_form_parts(rc, rs, None, th + d, -1.0, d)
        ds = integrated(rc, rs, th + d) - integrated(rc, rs, th)
        A[big], B[big], C[big] = a, b, ds - a
        Ap[big], Bp[big] = ap, bp
    return A, B, C, Ap, Bp


def reflect(rc, rs, theta, v):
    """Normal-angle gap of the next bounce for departure angle ``v`` in (0, pi).

    Returns ``(delta, v_plus)``.  The departure angle of the chord is strictly
    increasing in the gap on (0, 2 pi); a safeguarded Newton iteration keeps a
    bracket and falls back to bisection.
    """
    rc = np.asarray(rc, dtype=float)
    rs = np.asarray(rs, dtype=float)
    theta, v = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(v, dtype=float))
    theta = np.array(theta, dtype=float).ravel()
    v = np.array(v, dtype=float).ravel()
    lo = np.zeros_like(v)
    hi = np.full_like(v, 2.0 * np.pi)
    delta = np.clip(2.0 * v, 1e-300, 2.0 * np.pi * (1.0 - 1e-12))
    active = np.ones(v.shape, dtype=bool)
    vp = np.empty_like(v)
    for _ in range(NEWTON_MAXITER):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        th, d, vv = theta[idx], delta[idx], v[idx]
        A, B, _, Ap, Bp = chord(rc, rs, th, d)
        ang = np.arctan2(B, A)
        f = ang - vv
        lo[idx] = np.where(f < 0, d, lo[idx])
        hi[idx] = np.where(f > 0, d, hi[idx])
        vplus = np.arctan2(Bp, Ap)
        ell = np.hypot(A, B)
        slope = series(rc, rs, th + d) * np.sin(vplus) / ell
        new = d - f / slope
        bad = ~(new > lo[idx]) | ~(new < hi[idx]) | ~np.isfinite(new)
        new = np.where(bad, 0.5 * (lo[idx] + hi[idx]), new)
        done = (np.abs(new - d) <= 2e-16 * d) | (f == 0.0) | (hi[idx] - lo[idx] <= 4e-16 * d)
        delta[idx] = np.where(f == 0.0, d, new)
        vp[idx] = vplus
        finished = idx[done]
        active[finished] = False
    # arrival angle at the converged gap
    _, _, _, Ap, Bp = chord(rc, rs, theta, delta)
    vp = np.arctan2(Bp, Ap)
    return delta, vp


def orbit(rc, rs, theta0, v0, n):
    """Iterate :func:`reflect` ``n`` times from one state; returns (theta, v) arrays of length n+1."""
    thetas = np.empty(n + 1)
    vs = np.empty(n + 1)
    thetas[0], vs[0] = theta0, v0
    for i in range(n):
        d, vp = reflect(rc, rs, thetas[i], vs[i])
        thetas[i + 1] = thetas[i] + d[0]
        vs[i + 1] = vp[0]
    return thetas, vs
