"""Lazutkin coordinates, the conjugated billiard map and its generating function.

The chart is ``x = C1 int_0^s rho^(-2/3)``, ``y = 4 C1 rho^(1/3) sin(v/2)``
with ``l = y^2 / 2``, where ``rho`` is the radius of curvature.  In the
normal-angle parametrisation ``ds = r dtheta`` so
``x(theta) = C1 int_0^theta r^(1/3)`` and ``1 / C1 = 2 pi <r^(1/3)>``.
"""
from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .billiard import BilliardState, chord_geometry
from .boundary import BoundaryCurve
from .errors import CoincidentPoints, FitUnstable, OutOfChart
from .partials import Partials

SMALL_L = 1e-14
CHART_GRID = 8192
COINCIDENT_TOL = 1e-12


class LazutkinState(NamedTuple):
    """Lazutkin position ``x`` (lifted, period 1) and action ``l >= 0``."""

    x: float
    l: float


def _fourier_coefficients(values, rel_tol=1e-16):
    n = len(values)
    spec = np.fft.rfft(values) / n
    cos = 2.0 * spec.real
    sin = -2.0 * spec.imag
    cos[0] = spec[0].real
    if n % 2 == 0:
        cos[-1] = spec[-1].real
        sin[-1] = 0.0
    big = np.nonzero((np.abs(cos) > rel_tol * abs(cos[0])) | (np.abs(sin) > rel_tol * abs(cos[0])))[0]
    k = int(big.max()) + 1
    return np.ascontiguousarray(cos[:k]), np.ascontiguousarray(sin[:k])


@dataclass(frozen=True, eq=False)
class LazutkinChart:
    """Immutable chart; ``gc, gs`` are Fourier coefficients of r(theta)^(1/3)."""

    curve: BoundaryCurve
    C1: float
    gc: np.ndarray = field(repr=False)
    gs: np.ndarray = field(repr=False)

    def x_of_theta(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self.C1 * kernels.integrated(self.gc, self.gs, theta).reshape(theta.shape)

    def theta_of_x(self, x):
        x = np.asarray(x, dtype=float)
        return kernels.invert_integrated(self.gc, self.gs, x / self.C1).reshape(x.shape)

    def x_of_s(self, s):
        return self.x_of_theta(self.curve.theta_of_s(s))

    def s_of_x(self, x):
        return self.curve.s_of_theta(self.theta_of_x(x))

    def speed(self, theta):
        """ds/dx = rho^(2/3) / C1 at normal angle theta."""
        return self.curve.radius_at(theta) ** (2.0 / 3.0) / self.C1

    def action(self, theta, v):
        """l = 8 C1^2 rho^(2/3) sin^2(v/2)."""
        r = self.curve.radius_at(theta)
        return 8.0 * self.C1**2 * r ** (2.0 / 3.0) * np.sin(0.5 * v) ** 2

    def angle(self, theta, l):
        """Inverse of :meth:`action` for v in [0, pi]."""
        r = self.curve.radius_at(theta)
        arg = np.sqrt(np.asarray(l, dtype=float) / 8.0) / (self.C1 * np.cbrt(r))
        if np.any(arg > 1.0 + 1e-15):
            raise OutOfChart("action too large for the chart at this position")
        return 2.0 * np.arcsin(np.minimum(arg, 1.0))

    def summary(self):
        digest = hashlib.sha256()
        for arr in (self.curve.rc, self.curve.rs, self.gc, self.gs):
            digest.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        return {
            "C1": float(self.C1),
            "harmonics": int(len(self.gc)),
            "x_at_s_half": float(self.x_of_s(0.5)),
            "checksum": digest.hexdigest(),
        }


def build_chart(curve: BoundaryCurve, grid: int = CHART_GRID) -> LazutkinChart:
    """Chart of ``curve``; r^(1/3) is expanded spectrally on ``grid`` points."""
    theta = 2.0 * np.pi * np.arange(grid) / grid
    gc, gs = _fourier_coefficients(np.cbrt(curve.radius_at(theta)))
    C1 = 1.0 / (2.0 * np.pi * gc[0])
    return LazutkinChart(curve, C1, gc, gs)


def to_lazutkin(chart: LazutkinChart, state: BilliardState) -> LazutkinState:
    theta = chart.curve.theta_of_s(np.asarray(state.s, dtype=float))
    x = chart.x_of_theta(theta)
    l = chart.action(theta, np.asarray(state.v, dtype=float))
    return _pack(state, x, l, LazutkinState)


def from_lazutkin(chart: LazutkinChart, state: LazutkinState) -> BilliardState:
    theta = chart.theta_of_x(np.asarray(state.x, dtype=float))
    s = chart.curve.s_of_theta(theta)
    v = chart.angle(theta, state.l)
    return _pack(state, s, v, BilliardState)


def _pack(like, a, b, cls):
    if np.ndim(like[0]) == 0 and np.ndim(like[1]) == 0:
        return cls(float(np.ravel(a)[0]), float(np.ravel(b)[0]))
    shape = np.broadcast(np.asarray(like[0]), np.asarray(like[1])).shape
    return cls(np.reshape(a, shape), np.reshape(b, shape))


def lazutkin_map(chart: LazutkinChart, state: LazutkinState) -> LazutkinState:
    """Exact billiard map in Lazutkin coordinates (no series truncation).

    States with ``l < 1e-14`` are returned unchanged (the boundary circle).
    """
    x = np.atleast_1d(np.asarray(state.x, dtype=float))
    l = np.atleast_1d(np.asarray(state.l, dtype=float))
    x, l = np.broadcast_arrays(x, l)
    xp = x.copy()
    lp = l.copy()
    live = l >= SMALL_L
    if np.any(live):
        theta = chart.theta_of_x(x[live])
        v = chart.angle(theta, l[live])
        delta, vplus = kernels.reflect(chart.curve.rc, chart.curve.rs, theta, v)
        gc, gs = chart.gc, chart.gs
        xp[live] = x[live] + chart.C1 * (
            kernels.integrated(gc, gs, theta + delta) - kernels.integrated(gc, gs, theta)
        )
        lp[live] = chart.action(theta + delta, vplus)
    return _pack(state, xp, lp, LazutkinState)


def lazutkin_orbit(chart: LazutkinChart, state: LazutkinState, n: int):
    """``n`` iterates of :func:`lazutkin_map`; returns arrays (x, l) of length n + 1."""
    xs = np.empty(n + 1)
    ls = np.empty(n + 1)
    xs[0], ls[0] = state.x, state.l
    if state.l < SMALL_L:
        xs[:] = state.x
        ls[:] = state.l
        return xs, ls
    theta0 = float(chart.theta_of_x(state.x))
    v0 = float(chart.angle(theta0, state.l))
    thetas, vs = kernels.orbit(chart.curve.rc, chart.curve.rs, theta0, v0, n)
    xs[1:] = state.x + chart.C1 * (kernels.integrated(chart.gc, chart.gs, thetas[1:])
                                   - kernels.integrated(chart.gc, chart.gs, theta0))
    ls[1:] = chart.action(thetas[1:], vs[1:])
    return xs, ls


def tilde_h(chart: LazutkinChart, x, X) -> Partials:
    """Lazutkin generating function ``4 C1^3 [(s+ - s) - |P(s+) - P(s)|]`` with partials.

    Satisfies ``-d1 = l`` and ``d2 = l+``.  Requires ``0 < X - x < 1``.
    """
    x = np.asarray(x, dtype=float)
    X = np.asarray(X, dtype=float)
    gap = X - x
    if np.any(gap < COINCIDENT_TOL) or np.any(gap > 1.0 - COINCIDENT_TOL):
        raise CoincidentPoints("tilde_h needs 0 < X - x < 1")
    x, X = np.broadcast_arrays(x, X)
    shape = x.shape
    theta = chart.theta_of_x(x.ravel())
    theta_p = chart.theta_of_x(X.ravel())
    return _tilde_h_theta(chart, theta, theta_p, shape)


def _tilde_h_theta(chart, theta, theta_p, shape):
    curve = chart.curve
    C1 = chart.C1
    length, v, vp, _, excess = chord_geometry(curve, theta, theta_p - theta)
    r = curve.radius_at(theta)
    rp = curve.radius_at(theta_p)
    r1 = curve.radius_at(theta, 1)
    rp1 = curve.radius_at(theta_p, 1)
    r23, rp23 = r ** (2.0 / 3.0), rp ** (2.0 / 3.0)
    sv, svp = np.sin(v), np.sin(vp)
    sh2, shp2 = np.sin(0.5 * v) ** 2, np.sin(0.5 * vp) ** 2
    sig, sigp = r23 / C1, rp23 / C1
    h = 4.0 * C1**3 * excess
    h1 = -8.0 * C1**2 * r23 * sh2
    h2 = 8.0 * C1**2 * rp23 * shp2
    h12 = -4.0 * C1 * r23 * rp23 * sv * svp / length
    h11 = -8.0 * C1**2 * sig * ((2.0 / 3.0) * r ** (-4.0 / 3.0) * r1 * sh2 - 0.5 * r23 * (sv / r - sv * sv / length))
    h22 = 8.0 * C1**2 * sigp * ((2.0 / 3.0) * rp ** (-4.0 / 3.0) * rp1 * shp2 + 0.5 * rp23 * (svp / rp - svp * svp / length))
    return Partials(*(np.reshape(a, shape) for a in (h, h1, h2, h11, h12, h22)))


# -- near-boundary expansion --------------------------------------------------------------------

@dataclass(frozen=True)
class ExpansionCoeffs:
    """Coefficients of the small-angle expansion of the billiard map at arc length s."""

    alpha1: np.ndarray
    alpha2: np.ndarray
    alpha3: np.ndarray
    beta2: np.ndarray
    beta3: np.ndarray


def expansion_coeffs(curve: BoundaryCurve, s) -> ExpansionCoeffs:
    rho, d1, d2 = curve.radius_derivatives(np.asarray(s, dtype=float))
    return ExpansionCoeffs(
        alpha1=2.0 * rho,
        alpha2=(4.0 / 3.0) * rho * d1,
        alpha3=(2.0 / 3.0) * rho**2 * d2 + (4.0 / 9.0) * rho * d1**2,
        beta2=-(2.0 / 3.0) * d1,
        beta3=-(2.0 / 3.0) * rho * d2 + (4.0 / 9.0) * d1**2,
    )


def exact_step(curve: BoundaryCurve, s, v):
    """(s+ - s, v+) for one bounce with the arc increment computed without cancellation."""
    theta = curve.theta_of_s(np.atleast_1d(np.asarray(s, dtype=float)))
    v = np.broadcast_to(np.asarray(v, dtype=float), theta.shape)
    delta, vplus = kernels.reflect(curve.rc, curve.rs, theta, v)
    _, _, _, ds, _ = chord_geometry(curve, theta, delta)
    return ds, vplus


DEFAULT_EXPANSION_VS = 2.0 ** -np.arange(6, 17)
FLOOR_REL = 1e3 * np.finfo(float).eps
MIN_FIT_POINTS = 4


def fit_slope(xs, residuals, scale, label):
    """Log-log slope of ``residuals`` over points above the floating-point floor.

    Returns ``None`` when every residual is at the floor (the relation is exact).
    """
    xs = np.asarray(xs, dtype=float)
    residuals = np.abs(np.asarray(residuals, dtype=float))
    usable = residuals > FLOOR_REL * np.abs(scale)
    if not np.any(usable):
        return None
    if usable.sum() < MIN_FIT_POINTS:
        raise FitUnstable(f"{label}: only {int(usable.sum())} residuals above the rounding floor")
    return float(np.polyfit(np.log(xs[usable]), np.log(residuals[usable]), 1)[0])


def verify_expansion_order(curve: BoundaryCurve, s, vs=DEFAULT_EXPANSION_VS, chart=None):
    """Fitted exponents of the truncation residuals of the small-angle expansion.

    Returns a dict with ``s_slope``, ``v_slope`` and ``h_slope`` (``None`` marks
    an exact relation, listed in ``exact``).  ``h_slope`` uses gaps ``vs`` in x.
    """
    vs = np.asarray(vs, dtype=float)
    c = expansion_coeffs(curve, s)
    ds, vplus = exact_step(curve, np.full_like(vs, s), vs)
    s_series = c.alpha1 * vs + c.alpha2 * vs**2 + c.alpha3 * vs**3
    dv_series = c.beta2 * vs**2 + c.beta3 * vs**3
    s_res = ds - s_series
    v_res = (vplus - vs) - dv_series
    out = {
        "s": float(s),
        "v": vs.tolist(),
        "s_residual": s_res.tolist(),
        "v_residual": v_res.tolist(),
        "s_slope": fit_slope(vs, s_res, ds, "s+ residual"),
        "v_slope": fit_slope(vs, v_res, vs, "v+ residual"),
    }
    chart = chart or build_chart(curve)
    x0 = float(chart.x_of_s(s))
    ht = tilde_h(chart, np.full_like(vs, x0), x0 + vs)
    h_res = ht.h - vs**3 / 6.0
    out["h_residual"] = h_res.tolist()
    out["h_slope"] = fit_slope(vs, h_res, vs**3 / 6.0, "h residual")
    out["exact"] = [k for k in ("s_slope", "v_slope", "h_slope") if out[k] is None]
    return out


# -- output --------------------------------------------------------------------------------------

def write_phase_csv(path_or_file, orbits):
    """Write Lazutkin orbits as ``orbit,step,x,l`` at 17 significant digits."""
    own = isinstance(path_or_file, str) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["orbit", "step", "x", "l"])
        for k, (xs, ls) in enumerate(orbits):
            for i, (x, l) in enumerate(zip(xs, ls)):
                w.writerow([k, i, f"{x:.17g}", f"{l:.17g}"])
    finally:
        if own:
            fh.close()


def chart_summary_json(chart: LazutkinChart) -> str:
    return json.dumps(chart.summary(), indent=2, sort_keys=True)
