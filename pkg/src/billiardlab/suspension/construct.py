"""Assembly of the smooth periodic Hamiltonian and its verification.

Pipeline: Lazutkin generating function -> cutoff -> shear modification ->
tabulated Legendre dual -> piecewise Hamiltonian (kinetic outside the middle
window) -> time mollification -> generating-function blend on [t1, t2],
mirrored on [1 - t2, 1 - t1] by the time reflection (x, t) -> (-x, 1 - t).
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import PositivityViolation
from ..generating import CutoffGF, LazutkinGF, ShearModifiedGF
from ..lazutkin import LazutkinChart, LazutkinState, lazutkin_map
from .config import SuspensionConfig
from .flow import flow
from .hamiltonian import (
    MollifiedHamiltonian,
    PiecewiseHamiltonian,
    RemainderTable,
    SuspendedHamiltonian,
    build_remainder_table,
    kinetic,
    mollifier_drift,
)
from .lagrangian import InterpolatingLagrangian
from .wgen import BlendWindow, WTable, generating_w, identity_residual, reconstruction_residual


class SmoothedHamiltonian(SuspendedHamiltonian):
    """Time-periodic H~: mollified near t = 0 (mod 1), blended, then piecewise in the middle."""

    mode = "smoothed"

    def __init__(self, hhat: PiecewiseHamiltonian, hstar: MollifiedHamiltonian,
                 window: BlendWindow, mirror: BlendWindow):
        self.hhat = hhat
        self.hstar = hstar
        self.window = window
        self.mirror = mirror
        t1, t2 = window.t1, window.t2
        self.t1, self.t2 = t1, t2
        self.breakpoints = (t1, t2, 1.0 - t2, 1.0 - t1)
        self.diagnostics = {}

    def segment(self, t):
        t1, t2 = self.t1, self.t2
        if t <= t1 or t >= 1.0 - t1:
            return "mollified"
        if t < t2:
            return "blend"
        if t <= 1.0 - t2:
            return "piecewise"
        return "mirror"

    def parts(self, x, l, t):
        t = t - math.floor(t) if (t < 0.0 or t > 1.0) else t
        seg = self.segment(t)
        if seg == "mollified":
            return self.hstar.parts(x, l, t)
        if seg == "blend":
            return self.window.parts(x, l, t)
        if seg == "piecewise":
            return self.hhat.parts(x, l, t)
        R, RX, RL = self.mirror.parts(-x, l, 1.0 - t)
        return R, -RX, RL


@dataclass
class Suspension:
    """All stages of the construction for one chart and configuration."""

    config: SuspensionConfig
    chart: LazutkinChart
    lagrangian: InterpolatingLagrangian
    table: RemainderTable
    hhat: PiecewiseHamiltonian
    smoothed: SmoothedHamiltonian
    positivity: dict = field(default_factory=dict)


def modified_lagrangian(chart: LazutkinChart, config: SuspensionConfig) -> InterpolatingLagrangian:
    genfn = ShearModifiedGF(CutoffGF(LazutkinGF(chart), config.eps), config.kappa)
    return InterpolatingLagrangian(genfn, rtol=config.quad_rtol)


def piecewise_hamiltonian(chart: LazutkinChart, config: SuspensionConfig, lagr=None) -> PiecewiseHamiltonian:
    """Kinetic on [0, kappa), rescaled Legendre dual of the shear-modified function, kinetic again."""
    lagr = lagr or modified_lagrangian(chart, config)
    return PiecewiseHamiltonian(build_remainder_table(lagr, config), config.kappa)


def _w(H, config):
    return generating_w(H, (config.t1, config.t2), nx=config.w_nx, ny=config.w_ny, nt=config.w_nt,
                        l_top=config.l_top, rtol=config.ode_rtol)


def positivity_check(windows, config: SuspensionConfig, raise_on_fail=True) -> dict:
    """Grid minimum of the convexity ratio over the blend windows.

    The sufficient condition is ``ratio > 1 / (2 sqrt l)``; the report gives
    ``min(ratio * sqrt l)`` (must exceed 1/2) and the same scaling of the exact
    second derivative ``d^2 H~ / dL^2``.
    """
    X = np.arange(config.pos_nx) / config.pos_nx
    ls = np.geomspace(config.l_min, config.l_max, config.pos_nl)
    ts = np.linspace(config.t1, config.t2, config.pos_nt)
    XX, LL = np.meshgrid(X, ls, indexing="ij")
    XX, LL = XX.ravel(), LL.ravel()
    worst = math.inf
    worst_exact = math.inf
    point = None
    for name, win in windows.items():
        for t in ts:
            ratio, exact = win.convexity(XX, LL, t)
            scaled = ratio * np.sqrt(LL)
            i = int(np.argmin(scaled))
            if scaled[i] < worst:
                worst = float(scaled[i])
                point = {"window": name, "X": float(XX[i]), "l": float(LL[i]), "t": float(t)}
            worst_exact = min(worst_exact, float(np.min(exact * np.sqrt(LL))))
    report = {"min_ratio_sqrt_l": worst, "threshold": 0.5, "min_exact_sqrt_l": worst_exact,
              "margin": worst - 0.5, "worst_point": point,
              "grid": [config.pos_nx, config.pos_nl, config.pos_nt]}
    if raise_on_fail and not worst > 0.5:
        raise PositivityViolation(f"convexity ratio margin {worst:.6g} <= 1/2", point)
    return report


def mollify_and_blend(hhat: PiecewiseHamiltonian, config: SuspensionConfig, check=True) -> SmoothedHamiltonian:
    """Mollify ``hhat`` near its jumps and blend generating functions on the windows."""
    hstar = MollifiedHamiltonian(hhat, config.m_w)
    khat = hhat.reflected()
    kstar = MollifiedHamiltonian(khat, config.m_w)
    w_hat, w_star = _w(hhat, config), _w(hstar, config)
    k_hat, k_star = _w(khat, config), _w(kstar, config)
    window = BlendWindow(w_hat, w_star, config.t1, config.t2)
    mirror = BlendWindow(k_hat, k_star, config.t1, config.t2)
    H = SmoothedHamiltonian(hhat, hstar, window, mirror)
    diag = {}
    for name, wt, src in (("w_hat", w_hat, hhat), ("w_star", w_star, hstar),
                          ("k_hat", k_hat, khat), ("k_star", k_star, kstar)):
        rel_h, rel_r = reconstruction_residual(wt, src, tol=config.recon_tol)
        diag[name] = {"identity_residual": identity_residual(wt), "reconstruction_rel_H": rel_h,
                      "reconstruction_rel_remainder": rel_r}
    H.diagnostics["generating"] = diag
    if check:
        H.diagnostics["positivity"] = positivity_check({"start": window, "end": mirror}, config)
    return H


def suspend(chart: LazutkinChart, config: SuspensionConfig | None = None) -> Suspension:
    config = config or SuspensionConfig()
    lagr = modified_lagrangian(chart, config)
    hhat = piecewise_hamiltonian(chart, config, lagr)
    smooth = mollify_and_blend(hhat, config)
    return Suspension(config, chart, lagr, hhat.rt, hhat, smooth, smooth.diagnostics.get("positivity", {}))


# -- verification -----------------------------------------------------------------------------------

def _wrap(d):
    return (np.asarray(d) + 0.5) % 1.0 - 0.5


def conjugation_errors(H: SuspendedHamiltonian, chart: LazutkinChart, x, l, t_end=1.0, rtol=1e-11):
    """Time-one flow of H against the Lazutkin map: per-point |dx| and |dl| / l (|dl| where l = 0)."""
    res = flow(H, x, l, np.array([0.0, t_end]), rtol=rtol)
    X, L = lazutkin_map(chart, LazutkinState(np.asarray(x, dtype=float), np.asarray(l, dtype=float)))
    dx = np.abs(_wrap(res.x[-1] - X))
    l = np.asarray(l, dtype=float)
    dl = np.abs(res.l[-1] - L) / np.where(l > 0.0, l, 1.0)
    return res.x[-1], res.l[-1], np.asarray(X), np.asarray(L), dx, dl


def fit_exponent(ls, sups):
    """Least-squares slope of log(sup) against log(l)."""
    ls, sups = np.asarray(ls), np.asarray(sups)
    keep = sups > 0.0
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(ls[keep]), np.log(sups[keep]), 1)[0])


def remainder_exponent(H: SuspendedHamiltonian, ls, nx=32, nt=81, speed=None):
    """Fitted exponent of ``sup_{x,t} |H - speed K(l)|`` over the actions ``ls``."""
    xs = np.arange(nx) / nx
    ts = np.linspace(0.0, 1.0, nt)
    sups = []
    for l in ls:
        ll = np.full(nx, l)
        sups.append(max(float(np.max(np.abs(H.remainder(xs, ll, t)))) for t in ts))
    return fit_exponent(ls, sups), sups


def periodicity_error(H: SuspendedHamiltonian, ls=(1e-5, 1e-4, 1e-3), nx=32):
    xs = np.arange(nx) / nx
    worst = 0.0
    for l in ls:
        ll = np.full(nx, l)
        for f in (H.__call__, H.dx, H.dl):
            worst = max(worst, float(np.max(np.abs(f(xs, ll, 0.0) - f(xs, ll, 1.0)))))
    return worst


def joint_jumps(H: SmoothedHamiltonian, l=1e-3, nx=32, h=1e-7):
    """Relative jumps of H~ and of its time derivative across the segment joints."""
    xs = np.arange(nx) / nx
    ll = np.full(nx, l)
    scale = max(float(np.max(np.abs(H.remainder(xs, ll, t)))) for t in np.linspace(0, 1, 41))
    out = {}
    for tj in H.breakpoints:
        a = H.remainder(xs, ll, tj - h)
        b = H.remainder(xs, ll, tj + h)
        a2 = H.remainder(xs, ll, tj - 2 * h)
        b2 = H.remainder(xs, ll, tj + 2 * h)
        da = (a - a2) / h
        db = (b2 - b) / h
        out[f"{tj:.6g}"] = {"value": float(np.max(np.abs(b - a))) / scale,
                            "time_derivative": float(np.max(np.abs(db - da))) / scale}
    return out


def half_period_agreement(susp: Suspension, x, l):
    """Flows of H~ and of the piecewise Hamiltonian over [0, 1/2]: max |dx| and |dl| / l."""
    a = flow(susp.smoothed, x, l, np.array([0.0, 0.5]), rtol=susp.config.ode_rtol)
    b = flow(susp.hhat, x, l, np.array([0.0, 0.5]), rtol=susp.config.ode_rtol)
    return (float(np.max(np.abs(_wrap(a.x[-1] - b.x[-1])))),
            float(np.max(np.abs(a.l[-1] - b.l[-1]) / np.asarray(l))))


def drift_fit(hhat: PiecewiseHamiltonian, widths=(0.0125, 0.025, 0.05), nx=16, ny=6, nt=24):
    """``sup |V* - V^|`` at several mollifier widths with fitted exponent and constant."""
    xs = np.arange(nx) / nx
    y_top = hhat.rt.y_top
    ys = np.linspace(0.1, 1.0, ny) * y_top
    sups = []
    for m in widths:
        ts = np.linspace(hhat.kappa + m, 1.0 - hhat.kappa - m, nt)
        sups.append(mollifier_drift(hhat, m, xs, ys, ts))
    widths = np.asarray(widths)
    sups = np.asarray(sups)
    return {"widths": widths.tolist(), "sup": sups.tolist(), "exponent": fit_exponent(widths, sups),
            "constant": float(np.max(sups / widths))}


def verify_main_theorem(chart: LazutkinChart, config: SuspensionConfig | None = None, susp=None,
                        n_x=16, ls=None, seed=0):
    """Build (or reuse) the suspension and check conjugation, remainder form and periodicity.

    Returns ``(report, rows)`` where rows are per-test-point CSV records.
    """
    config = config or SuspensionConfig()
    susp = susp or suspend(chart, config)
    ls = np.geomspace(1e-5, 1e-3, 9) if ls is None else np.asarray(ls, dtype=float)
    rng = np.random.default_rng(seed)
    xs = (np.arange(n_x) + rng.uniform(0.0, 1.0, n_x)) / n_x
    XX, LL = np.meshgrid(xs, ls, indexing="ij")
    x0, l0 = XX.ravel(), LL.ravel()
    xf, lf, xm, lm, dx, dl = conjugation_errors(susp.smoothed, chart, x0, l0, rtol=config.ode_rtol)
    expo, sups = remainder_exponent(susp.smoothed, ls)
    report = {
        "conjugation_error": {"max_dx": float(dx.max()), "max_dl_rel": float(dl.max()),
                              "points": int(x0.size), "l_range": [float(ls.min()), float(ls.max())]},
        "remainder_exponent": expo,
        "remainder_sup": dict(zip([f"{v:.6g}" for v in ls], sups)),
        "positivity_margin": susp.positivity.get("margin"),
        "positivity": susp.positivity,
        "periodicity_error": periodicity_error(susp.smoothed),
        "joint_jumps": joint_jumps(susp.smoothed),
        "generating": susp.smoothed.diagnostics.get("generating", {}),
        "config": config.to_dict(),
    }
    rows = [{"x0": a, "l0": b, "x_flow": c, "l_flow": d, "x_map": e, "l_map": f, "dx": g, "dl_rel": h}
            for a, b, c, d, e, f, g, h in zip(x0, l0, xf, lf, xm, lm, dx, dl)]
    return report, rows


def write_report(report, path):
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def write_verification_csv(rows, path):
    cols = ["x0", "l0", "x_flow", "l_flow", "x_map", "l_map", "dx", "dl_rel"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in rows:
            w.writerow([format(float(r[c]), ".17g") for c in cols])


def circulation(step, x, l, radius, n=256):
    """``int (l dx - L dX)`` around a circle of ``radius`` about (x, l), mapped by ``step(x, l) -> (X, L)``.

    Vanishes for exact symplectic maps.  The periodic part ``X - x`` of the
    image loop is differentiated spectrally; the rule is the periodic trapezoid.
    """
    th = 2.0 * np.pi * np.arange(n) / n
    xs = x + radius * np.cos(th)
    lsv = l + radius * np.sin(th)
    X, L = step(xs, lsv)
    X, L = np.asarray(X, dtype=float), np.asarray(L, dtype=float)
    k = np.fft.rfftfreq(n, 1.0 / n)
    spec = 1j * k * np.fft.rfft(X - xs)
    spec[-1] = 0.0
    dx = -radius * np.sin(th)
    dX = dx + np.fft.irfft(spec, n)
    return float(np.sum(lsv * dx - L * dX) * (2.0 * np.pi / n))
