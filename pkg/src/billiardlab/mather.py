"""Discrete Aubry-Mather computations for twist maps given by a generating function.

Periodic minimal configurations, the minimal average action beta and its
convex conjugate alpha, rotation numbers, and a gap detector for the
projected minimal sets.  All routines work with any object exposing
``partials(x, X)`` (see :mod:`billiardlab.generating`), normally the
Lazutkin generating function, so that ``beta(w) ~ w^3 / 6`` near 0.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import eigsh, spsolve

from .errors import FitUnstable, NoConvergence, OrderingCollapse, OutOfSlopeRange

Q_CAP = 377
RATIONAL_DENOMINATOR = 100_000
GRAD_TOL = 1e-12
MIN_GAP = 1e-12
MAX_ITER = 500
MAX_HALVINGS = 60
EQUAL_ACTION = 1e-14


@dataclass(frozen=True)
class Configuration:
    """Periodic configuration x_0..x_{q-1} with x_q = x_0 + p (lifted, increasing when p > 0)."""

    p: int
    q: int
    x: np.ndarray
    action: float
    residual: float = 0.0
    iterations: int = 0
    restart_actions: tuple = ()

    @property
    def omega(self):
        return self.p / self.q

    def closed(self):
        return np.append(self.x, self.x[0] + self.p)

    def gaps(self):
        return np.diff(self.closed())

    def projected(self):
        return np.sort(np.mod(self.x, 1.0))


def _cyclic_gaps(points):
    pts = np.sort(np.mod(points, 1.0))
    return np.diff(np.append(pts, pts[0] + 1.0)), pts


def action(genfn, p, x):
    """Periodic action ``sum h(x_i, x_{i+1})`` with ``x_q = x_0 + p``."""
    x = np.asarray(x, dtype=float)
    return float(np.sum(genfn.partials(x, np.append(x[1:], x[0] + p)).h))


def _derivatives(genfn, p, x):
    """Action, gradient and cyclic tridiagonal Hessian (sparse)."""
    q = x.size
    nxt = np.append(x[1:], x[0] + p)
    d = genfn.partials(x, nxt)
    # d_i = h(x_i, x_{i+1}); x_i appears as first argument of d_i and second of d_{i-1}
    grad = d.h1 + np.roll(d.h2, 1)
    diag = d.h11 + np.roll(d.h22, 1)
    if q == 1:
        hess = sparse.csc_matrix(np.array([[diag[0] + 2.0 * d.h12[0]]]))
    elif q == 2:
        off = d.h12[0] + d.h12[1]
        hess = sparse.csc_matrix(np.array([[diag[0], off], [off, diag[1]]]))
    else:
        i = np.arange(q)
        j = (i + 1) % q
        rows = np.concatenate([i, i, j])
        cols = np.concatenate([i, j, i])
        vals = np.concatenate([diag, d.h12, d.h12])
        hess = sparse.csc_matrix((vals, (rows, cols)), shape=(q, q))
    return float(np.sum(d.h)), grad, hess


def _min_eigenvalue(H):
    n = H.shape[0]
    if n <= 600:
        return float(np.linalg.eigvalsh(H.toarray())[0])
    return float(eigsh(H, k=1, which="SA", return_eigenvectors=False, tol=1e-6)[0])


def _admissible(x, p, max_gap):
    g = np.diff(np.append(x, x[0] + p))
    return bool(np.all(g > MIN_GAP) and np.all(g < max_gap - MIN_GAP))


def _descend(genfn, p, x, pinned=None, tol=GRAD_TOL, maxiter=MAX_ITER):
    """Damped Newton with order-preserving backtracking.  ``pinned`` freezes one index."""
    max_gap = getattr(genfn, "max_gap", 1.0)
    x = x.copy()
    free = np.ones(x.size, dtype=bool)
    damped = False
    if pinned is not None:
        free[pinned] = False
    for it in range(maxiter):
        A, g, Hs = _derivatives(genfn, p, x)
        g = np.where(free, g, 0.0)
        res = float(np.max(np.abs(g)))
        if res < tol:
            return x, A, res, it
        H = Hs.tolil()
        if pinned is not None:
            H[pinned, :] = 0.0
            H[:, pinned] = 0.0
            H[pinned, pinned] = 1.0
        H = H.tocsc()
        scale = max(float(np.max(np.abs(Hs.diagonal()))), 1e-300)
        # shift by the negative part of the spectrum so that every step descends
        mu = 1e-10 * scale
        if damped:
            mu += max(0.0, -1.1 * _min_eigenvalue(H))
        step = None
        for _ in range(8):
            cand = -spsolve(H + mu * sparse.identity(x.size, format="csc"), g)
            if np.all(np.isfinite(cand)) and float(g @ cand) < 0.0:
                step = cand
                break
            mu = 10.0 * mu + 1e-8 * scale
        if step is None:
            step = -g / scale
        s = 1.0
        for _ in range(MAX_HALVINGS):
            trial = x + s * step
            if _admissible(trial, p, max_gap):
                At = action(genfn, p, trial)
                if At <= A + 1e-4 * s * float(g @ step) + 1e-15 * abs(A):
                    break
            s *= 0.5
        else:
            raise OrderingCollapse(f"no order-preserving descent step for p/q = {p}/{x.size}")
        damped = s < 1.0
        x = trial
    A, g, _ = _derivatives(genfn, p, x)
    g = np.where(free, g, 0.0)
    res = float(np.max(np.abs(g)))
    if res < 1e3 * tol:
        return x, A, res, maxiter
    raise NoConvergence(f"minimal configuration {p}/{x.size}: residual {res:.3g} after {maxiter} iterations")


def _normalise(x, p):
    """Relabel cyclically so that x_0 is the smallest point mod 1 and lies in [0, 1)."""
    q = x.size
    frac = np.mod(x, 1.0)
    k = int(np.argmin(frac))
    ext = np.concatenate([x, x + p])
    y = ext[k:k + q]
    return y - math.floor(y[0])


def minimal_configuration(genfn, p: int, q: int, restarts: int = 3, seed: int = 0,
                          tol: float = GRAD_TOL, maxiter: int = MAX_ITER) -> Configuration:
    """Best of ``restarts`` order-preserving minimizations of the periodic action.

    Restart 0 starts from the rigid rotation; the others from stratified
    shifts with seeded perturbations.  Restarts that fail to converge are
    skipped; the error is raised only when all of them fail.  Ties (equal
    action) go to the lexicographically smallest normalised configuration.
    """
    if q < 1 or math.gcd(p, q) != 1:
        raise ValueError("need q >= 1 and gcd(p, q) = 1")
    if not 0 < p / q < getattr(genfn, "max_gap", 1.0):
        raise ValueError(f"rotation number {p}/{q} outside the generating-function range")
    rng = np.random.default_rng(seed)
    omega = p / q
    amp = 0.05 * min(omega, getattr(genfn, "max_gap", 1.0) - omega) if q > 1 else 0.0
    base = np.arange(q) * omega
    best = None
    history = []
    failure = None
    for j in range(max(restarts, 1)):
        x0 = j / (max(restarts, 1) * q)
        pert = rng.uniform(-1.0, 1.0, q) * amp if j else np.zeros(q)
        try:
            x, A, res, it = _descend(genfn, p, x0 + base + pert, tol=tol, maxiter=maxiter)
        except (NoConvergence, OrderingCollapse) as exc:
            failure = exc
            if best is not None:
                history.append(best.action)
            continue
        x = _normalise(x, p)
        cand = Configuration(p, q, x, A, res, it)
        if best is None or A < best.action - EQUAL_ACTION * abs(A):
            best = cand
        elif abs(A - best.action) <= EQUAL_ACTION * abs(A) + 1e-300 and tuple(x) < tuple(best.x):
            best = cand
        history.append(best.action)
    if best is None:
        raise failure
    return Configuration(p, q, best.x, best.action, best.residual, best.iterations, tuple(history))


def stationarity_residual(genfn, conf: Configuration):
    _, g, _ = _derivatives(genfn, conf.p, np.asarray(conf.x, dtype=float))
    return float(np.max(np.abs(g)))


# -- rotation numbers and continued fractions ------------------------------------------------------

def as_rational(omega, max_den=RATIONAL_DENOMINATOR, tol=1e-14):
    """``(p, q)`` if omega is a rational with small denominator, else None."""
    f = Fraction(float(omega)).limit_denominator(max_den)
    if abs(float(f) - omega) <= tol * max(1.0, abs(omega)):
        return f.numerator, f.denominator
    return None


def rational_grid(lo, hi, n, max_den=1000, geometric=True):
    """Increasing grid of rationals p/q (q <= max_den) near a geometric or uniform grid."""
    pts = np.geomspace(lo, hi, n) if geometric else np.linspace(lo, hi, n)
    out = sorted({Fraction(float(w)).limit_denominator(max_den) for w in pts})
    return np.array([float(f) for f in out if f > 0])


def convergents(omega, q_cap=Q_CAP):
    """Continued-fraction convergents ``(p_k, q_k)`` of omega with ``q_k <= q_cap``."""
    out = []
    p0, q0, p1, q1 = 0, 1, 1, 0
    r = float(omega)
    for _ in range(64):
        a = math.floor(r)
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        if q1 > q_cap:
            break
        out.append((p1, q1))
        frac = r - a
        if frac < 1e-15:
            break
        r = 1.0 / frac
    return out


@dataclass(frozen=True)
class BetaValue:
    omega: float
    beta: float
    err: float
    used: tuple = ()


def beta_at(genfn, omega, tolerance=1e-12, q_cap=Q_CAP, restarts=3, seed=0) -> BetaValue:
    """Minimal average action at rotation number omega (even extension to omega < 0).

    Rationals use the periodic minimizer.  Irrationals use the convergents
    with q <= q_cap and a linear extrapolation in omega through the last two.
    """
    w = abs(float(omega))
    if w == 0.0:
        return BetaValue(float(omega), 0.0, 0.0, ((0, 1),))
    rat = as_rational(w)
    if rat is not None:
        p, q = rat
        conf = minimal_configuration(genfn, p, q, restarts=restarts, seed=seed, tol=tolerance)
        return BetaValue(float(omega), conf.action / q, 0.0, ((p, q),))
    conv = [(p, q) for p, q in convergents(w, q_cap) if p > 0]
    if not conv:
        raise NoConvergence(f"no convergent of {w} with 0 < p and q <= {q_cap}")
    vals = [minimal_configuration(genfn, p, q, restarts=restarts, seed=seed, tol=tolerance).action / q
            for p, q in conv[-3:]]
    ws = [p / q for p, q in conv[-3:]]
    if len(vals) == 1:
        return BetaValue(float(omega), vals[0], abs(vals[0]), tuple(conv[-1:]))

    def extrap(i, j):
        return vals[j] + (vals[j] - vals[i]) / (ws[j] - ws[i]) * (w - ws[j])

    est = extrap(-2, -1)
    err = abs(est - extrap(-3, -2)) if len(vals) == 3 else abs(est - vals[-1])
    return BetaValue(float(omega), est, err, tuple(conv[-3:]))


@dataclass(frozen=True)
class BetaTable:
    omega: np.ndarray
    beta: np.ndarray
    err: np.ndarray

    def convexity_flags(self, tol=1e-10):
        """Per-interior-sample flag: the chord slopes on either side are nondecreasing."""
        w, b = self.omega, self.beta
        s = np.diff(b) / np.diff(w)
        flags = np.ones(w.size, dtype=bool)
        flags[1:-1] = s[1:] - s[:-1] >= -tol
        return flags

    @property
    def convex(self):
        return bool(np.all(self.convexity_flags()))

    def slope_range(self):
        s = np.diff(self.beta) / np.diff(self.omega)
        lo = 0.0 if self.omega[0] == 0.0 else float(s[0])
        return lo, float(s[-1])


@dataclass(frozen=True)
class AlphaTable:
    c: np.ndarray
    alpha: np.ndarray

    def convexity_flags(self, tol=1e-10):
        s = np.diff(self.alpha) / np.diff(self.c)
        flags = np.ones(self.c.size, dtype=bool)
        flags[1:-1] = s[1:] - s[:-1] >= -tol
        return flags


def _beta_cell(args):
    genfn, w, q_cap, seed = args
    v = beta_at(genfn, w, q_cap=q_cap, seed=seed)
    return v.beta, v.err


def beta_table(genfn, omegas, q_cap=Q_CAP, seed=0, jobs=1) -> BetaTable:
    """Sample beta on the increasing grid ``omegas`` (cells are independent)."""
    omegas = np.asarray(omegas, dtype=float)
    if omegas.size < 2 or np.any(np.diff(omegas) <= 0.0):
        raise ValueError("omega grid must be increasing with at least two points")
    cells = [(genfn, float(w), q_cap, seed) for w in omegas]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            res = list(ex.map(_beta_cell, cells))
    else:
        res = [_beta_cell(c) for c in cells]
    return BetaTable(omegas, np.array([r[0] for r in res]), np.array([r[1] for r in res]))


def alpha_from_beta(table: BetaTable, c) -> float:
    """``max_w (c w - beta(w))`` over the samples, refined by a local quadratic fit."""
    c = float(c)
    lo, hi = table.slope_range()
    if not lo - 1e-15 <= c <= hi + 1e-15:
        raise OutOfSlopeRange(f"slope {c:.6g} outside [{lo:.6g}, {hi:.6g}]")
    w, b = table.omega, table.beta
    vals = c * w - b
    i = int(np.argmax(vals))
    best = float(vals[i])
    if 0 < i < w.size - 1:
        coef = np.polyfit(w[i - 1:i + 2] - w[i], b[i - 1:i + 2], 2)
        a2, a1 = coef[0], coef[1]
        if a2 > 0.0:
            d = (c - a1) / (2.0 * a2)
            if w[i - 1] - w[i] <= d <= w[i + 1] - w[i]:
                best = max(best, float(c * (w[i] + d) - np.polyval(coef, d)))
    return best


def alpha_table(table: BetaTable, cs) -> AlphaTable:
    cs = np.asarray(cs, dtype=float)
    return AlphaTable(cs, np.array([alpha_from_beta(table, c) for c in cs]))


def fenchel_gap(table: BetaTable, atab: AlphaTable):
    """``min (alpha(c) + beta(w) - c w)`` over all sample pairs (nonnegative when consistent)."""
    return float(np.min(atab.alpha[:, None] + table.beta[None, :] - atab.c[:, None] * table.omega[None, :]))


def circle_beta(omega, radius=1.0 / (2.0 * math.pi)):
    """Closed-form beta of the round billiard in Lazutkin normalisation."""
    w = np.abs(np.asarray(omega, dtype=float))
    return 4.0 * radius**2 * (w - np.sin(np.pi * w) / np.pi)


def circle_alpha(c, rho=1.0 / (2.0 * math.pi)):
    """Closed-form conjugate of :func:`circle_beta`, valid for ``0 <= c <= 8 rho^2``."""
    c = np.asarray(c, dtype=float)
    a = np.arcsin(np.sqrt(c / (8.0 * rho**2)))
    return 4.0 * rho * c * a - 16.0 * rho**3 * a + 2.0 * rho * np.sqrt(np.maximum(8.0 * rho**2 * c - c * c, 0.0))


def beta_degeneracy_check(table: BetaTable, n_fit=5, min_slope=2.9) -> dict:
    """Log-log slope of beta over the ``n_fit`` smallest positive rotation numbers."""
    keep = (table.omega > 0.0) & (table.beta > 0.0)
    w, b = table.omega[keep], table.beta[keep]
    if w.size < 3:
        raise FitUnstable("need at least three positive samples near 0")
    w, b = w[:n_fit], b[:n_fit]
    A = np.vstack([np.log(w), np.ones_like(w)]).T
    coef, *_ = np.linalg.lstsq(A, np.log(b), rcond=None)
    resid = np.log(b) - A @ coef
    if not np.all(np.isfinite(coef)) or float(np.max(np.abs(resid))) > 0.05:
        raise FitUnstable("beta samples are not close to a power law near 0")
    ratio = b / w**2.5
    return {"slope": float(coef[0]), "min_slope": min_slope, "passed": bool(coef[0] >= min_slope),
            "omega_fit": w.tolist(), "beta_over_omega_2_5": ratio.tolist(),
            "ratio_shrinks_toward_zero": bool(np.all(np.diff(ratio) > 0.0)),
            "max_log_residual": float(np.max(np.abs(resid)))}


def rotation_number(xs, windows=10):
    """``(omega, err)`` of a lifted orbit: weighted Birkhoff average of the increments.

    The smooth weight ``exp(-1 / (s (1 - s)))`` accelerates convergence for
    quasi-periodic orbits; the error bar is the spread of per-window estimates.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.size < 100:
        raise ValueError("rotation_number needs at least 100 points")
    inc = np.diff(xs)
    n = inc.size
    s = (np.arange(n) + 0.5) / n
    wgt = np.exp(-1.0 / (s * (1.0 - s)))
    omega = float(np.sum(wgt * inc) / np.sum(wgt))
    plain = (xs[-1] - xs[0]) / n
    m = n // windows
    if m >= 1:
        est = np.array([(xs[(k + 1) * m] - xs[k * m]) / m for k in range(windows)])
        spread = float(np.std(est) / math.sqrt(windows))
    else:
        spread = 0.0
    return omega, max(spread, abs(omega - plain) / n)


# -- gap detection -----------------------------------------------------------------------------------

@dataclass(frozen=True)
class MatherSetApprox:
    omega: float
    p: int
    q: int
    points: np.ndarray
    momentum: np.ndarray
    gap_flag: np.ndarray
    largest_gap: float
    barrier: float
    degenerate: bool
    status: str
    gap_history: tuple = field(default_factory=tuple)

    def graph_violation(self, x_tol=1e-9):
        """Largest momentum difference between projected points closer than ``x_tol``."""
        pts, mom = self.points, self.momentum
        order = np.argsort(pts)
        pts, mom = pts[order], mom[order]
        close = np.diff(pts) < x_tol
        if not np.any(close):
            return 0.0
        return float(np.max(np.abs(np.diff(mom))[close]))


def left_neighbours(p, q, q_cap):
    """Rationals ``(p n + a) / (q n + b)`` increasing to p/q, with a/b the left Farey neighbour."""
    if q == 1:
        a, b = p - 1, 1
    else:
        b = pow(p, -1, q)  # p b = 1 (mod q)
        a = (p * b - 1) // q
    out = []
    n = 1
    while q * n + b <= q_cap:
        pp, qq = p * n + a, q * n + b
        if pp > 0 and math.gcd(pp, qq) == 1:
            out.append((pp, qq))
        n += 1
    return out


def peierls_barrier(genfn, conf: Configuration, tol=GRAD_TOL):
    """Action increase when one point is pinned at the middle of the largest projected gap."""
    gaps, pts = _cyclic_gaps(conf.x)
    k = int(np.argmax(gaps))
    mid = pts[k] + 0.5 * gaps[k]
    if conf.q == 1:
        return float(action(genfn, conf.p, np.array([mid])) - conf.action)
    # rigid shift so that x_0 sits at the middle of the gap, then relax the other points
    x = np.asarray(conf.x, dtype=float)
    shift = mid - x[0] if mid >= x[0] else mid + 1.0 - x[0]
    start = x + shift
    _, A, _, _ = _descend(genfn, conf.p, start, pinned=0, tol=tol)
    return float(A - conf.action)


def _mather_set(genfn, conf: Configuration, omega, barrier, history):
    x = np.asarray(conf.x, dtype=float)
    nxt = np.append(x[1:], x[0] + conf.p)
    mom = -genfn.partials(x, nxt).h1
    frac = np.mod(x, 1.0)
    order = np.argsort(frac)
    pts, mom = frac[order], mom[order]
    gaps = np.diff(np.append(pts, pts[0] + 1.0))
    largest = float(gaps.max())
    scale = max(abs(conf.action), 1e-300)
    degenerate = barrier <= 1e-10 * scale
    flags = (gaps > 2.0 / conf.q).astype(int)
    status = "degenerate: invariant curve" if degenerate else "gap"
    return MatherSetApprox(float(omega), conf.p, conf.q, pts, mom, flags, largest, float(barrier),
                           bool(degenerate), status, tuple(history))


def gap_measure(genfn, omega, q_cap=Q_CAP, restarts=3, seed=0) -> MatherSetApprox:
    """Projected minimal set and its largest complementary interval.

    Irrational omega: the convergent with the largest q <= q_cap.  Rational
    p/q: the periodic minimizer decides degeneracy (zero Peierls barrier),
    while the reported set comes from the approximants p'/q' increasing to
    p/q (the p/q- side), so the gap history shows whether a hole persists
    as q_cap grows.
    """
    rat = as_rational(omega)
    if rat is None:
        conv = [(p, q) for p, q in convergents(omega, q_cap) if p > 0]
        if not conv:
            raise NoConvergence(f"no convergent of {omega} with q <= {q_cap}")
        history = []
        conf = None
        for p, q in conv:
            conf = minimal_configuration(genfn, p, q, restarts=restarts, seed=seed)
            history.append((q, float(_cyclic_gaps(conf.x)[0].max())))
        return _mather_set(genfn, conf, omega, peierls_barrier(genfn, conf), history)
    p, q = rat
    periodic = minimal_configuration(genfn, p, q, restarts=restarts, seed=seed)
    barrier = peierls_barrier(genfn, periodic)
    approx = left_neighbours(p, q, q_cap)
    history = [(q, float(_cyclic_gaps(periodic.x)[0].max()))]
    conf = periodic
    # geometric subsequence of approximants keeps the cost bounded
    picks = sorted({approx[i] for i in _geometric_indices(len(approx))}, key=lambda r: r[1])
    for pp, qq in picks:
        conf = minimal_configuration(genfn, pp, qq, restarts=restarts, seed=seed)
        history.append((qq, float(_cyclic_gaps(conf.x)[0].max())))
    return _mather_set(genfn, conf, omega, barrier, history)


def _geometric_indices(n):
    if n == 0:
        return []
    idx = {n - 1}
    k = 0
    while k < n - 1:
        idx.add(k)
        k = 2 * k + 1
    return sorted(idx)


def equispacing_defect(conf: Configuration):
    """Max deviation of the projected points from the best-fitting rigid rotation orbit."""
    gaps, pts = _cyclic_gaps(conf.x)
    q = conf.q
    ideal = pts[0] + np.arange(q) / q
    dev = pts - ideal
    dev -= dev.mean()
    return float(np.max(np.abs(dev)))


# -- CSV output -------------------------------------------------------------------------------------

def _fmt(v):
    return format(float(v), ".17g")


def write_beta_csv(table: BetaTable, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["omega", "beta", "err"])
        for row in zip(table.omega, table.beta, table.err):
            w.writerow([_fmt(v) for v in row])


def write_alpha_csv(table: AlphaTable, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["c", "alpha"])
        for row in zip(table.c, table.alpha):
            w.writerow([_fmt(v) for v in row])


def write_mather_set_csv(mset: MatherSetApprox, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "momentum", "gap_flag"])
        for x, m, f in zip(mset.points, mset.momentum, mset.gap_flag):
            w.writerow([_fmt(x), _fmt(m), int(f)])
