"""Hamiltonian flows of suspended Hamiltonians.

States are integrated as scaled deviations from the integrable motion of
their start point ``(x0, l0)`` at time ``t0``:

    x = x0 + speed sqrt(2 l0) (t - t0) + l0^1.5 u,    l = l0 + l0^2.5 q,

so u and q are O(1) and the tiny perturbation is resolved to full relative
accuracy even for l0 around 1e-7.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from ..errors import StepUnderflow
from .hamiltonian import SuspendedHamiltonian, sqrt2_difference

DEFAULT_RTOL = 1e-11
DEFAULT_ATOL = 1e-12


@dataclass(frozen=True)
class FlowResult:
    """Flow samples at ``times`` (rows) for every start state (columns)."""

    times: np.ndarray
    x: np.ndarray
    l: np.ndarray
    u: np.ndarray
    q: np.ndarray


def _scales(l0):
    sx = np.where(l0 > 0.0, l0 * np.sqrt(l0), 1.0)
    return sx, np.where(l0 > 0.0, sx * l0, 1.0)


def flow(H: SuspendedHamiltonian, x0, l0, times, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL) -> FlowResult:
    """Integrate Hamilton's equations of ``H`` from ``times[0]`` through increasing ``times``.

    The integrator restarts at the Hamiltonian's breakpoints.  Raises
    :class:`StepUnderflow` if DOP853 fails.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float)).ravel()
    l0 = np.atleast_1d(np.asarray(l0, dtype=float)).ravel()
    x0, l0 = np.broadcast_arrays(x0, l0)
    if np.any(l0 < 0.0):
        raise ValueError("flows start in the upper annulus l >= 0")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) < 0.0):
        raise ValueError("times must be a non-decreasing sequence")
    t0 = times[0]
    n = x0.size
    sx, sl = _scales(l0)
    speed = H.speed

    def rhs(t, z):
        u, q = z[:n], z[n:]
        l = l0 + sl * q
        x = x0 + speed * np.sqrt(2.0 * l0) * (t - t0) + sx * u
        R, Rx, Rl = H.parts(x, np.maximum(l, 0.0), t)
        du = (speed * sqrt2_difference(l, l0) + Rl) / sx
        dq = -Rx / sl
        return np.concatenate([du, dq])

    cuts = [b for b in H.breakpoints if times[0] < b < times[-1]]
    edges = [times[0]] + cuts + [times[-1]]
    z = np.zeros(2 * n)
    U = np.zeros((times.size, n))
    Q = np.zeros((times.size, n))
    for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        inside = (times >= a) & (times <= b) if i == 0 else (times > a) & (times <= b)
        if b > a:
            te = np.union1d(times[inside], [b])
            sol = solve_ivp(rhs, (a, b), z, method="DOP853", rtol=rtol, atol=atol, t_eval=te)
            if sol.status != 0:
                raise StepUnderflow(f"flow integration failed on [{a}, {b}]: {sol.message}")
            pos = np.searchsorted(te, times[inside])
            U[inside] = sol.y[:n, pos].T
            Q[inside] = sol.y[n:, pos].T
            z = sol.y[:, -1]
        else:
            U[inside] = z[:n]
            Q[inside] = z[n:]
    x = x0 + speed * np.sqrt(2.0 * l0) * (times[:, None] - t0) + sx * U
    l = l0 + sl * Q
    return FlowResult(times, x, l, U, Q)


def time_one_map(H: SuspendedHamiltonian, x, l, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Image of (x, l) under the flow of H from t = 0 to t = 1."""
    res = flow(H, x, l, np.array([0.0, 1.0]), rtol=rtol, atol=atol)
    return res.x[-1], res.l[-1]
