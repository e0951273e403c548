"""Billiard map on the annulus T x (0, pi) and the chord-length generating function."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .boundary import BoundaryCurve
from .errors import CoincidentPoints, DegenerateTangency

V_MIN = 1e-9
COINCIDENT_TOL = 1e-12


class BilliardState(NamedTuple):
    """Arc length ``s`` (lifted real, period 1) and reflection angle ``v`` in (0, pi)."""

    s: float
    v: float


@dataclass(frozen=True)
class ChordData:
    """Chord between P(s) and P(s_plus) with h = -length and its partials."""

    s: np.ndarray
    s_plus: np.ndarray
    length: np.ndarray
    v: np.ndarray
    v_plus: np.ndarray
    h: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d12: np.ndarray
    d11: np.ndarray
    d22: np.ndarray


def chord_geometry(curve: BoundaryCurve, theta, delta):
    """Chord quantities between normal angles theta and theta + delta (vectorised).

    Returns ``(length, v, v_plus, ds, excess)`` where ``ds`` is the arc length
    spanned and ``excess = ds - length`` is computed without cancellation.
    """
    A, B, C, Ap, Bp = kernels.chord(curve.rc, curve.rs, theta, delta)
    length = np.hypot(A, B)
    ds = A + C
    # ds^2 - length^2 = C (2A + C) - B^2, every term well conditioned for short chords
    excess = (C * (2.0 * A + C) - B * B) / (ds + length)
    return length, np.arctan2(B, A), np.arctan2(Bp, Ap), ds, excess


def _check_angles(v, v_min):
    v = np.asarray(v, dtype=float)
    if np.any(~(v >= v_min)) or np.any(~(v <= np.pi - v_min)):
        bad = v[(~(v >= v_min)) | (~(v <= np.pi - v_min))].ravel()[0]
        raise DegenerateTangency(f"reflection angle {bad!r} outside [{v_min}, pi - {v_min}]")


def reflect(curve: BoundaryCurve, state: BilliardState, v_min: float = V_MIN) -> BilliardState:
    """One bounce.  Works elementwise on array-valued states; ``s`` stays lifted (s+ > s)."""
    s = np.asarray(state.s, dtype=float)
    v = np.asarray(state.v, dtype=float)
    _check_angles(v, v_min)
    theta = curve.theta_of_s(s)
    delta, v_plus = kernels.reflect(curve.rc, curve.rs, theta, v)
    delta = delta.reshape(np.shape(theta))
    v_plus = v_plus.reshape(np.shape(theta))
    s_plus = curve.s_of_theta(theta + delta)
    if np.ndim(state.s) == 0 and np.ndim(state.v) == 0:
        return BilliardState(float(s_plus), float(v_plus))
    return BilliardState(s_plus, v_plus)


def generating_h(curve: BoundaryCurve, s, s_plus) -> ChordData:
    """h(s, s+) = -|P(s+) - P(s)| with its analytic first and second partials.

    The forward gap ``(s+ - s) mod 1`` selects the chord; coincident points raise.
    """
    s = np.asarray(s, dtype=float)
    s_plus = np.asarray(s_plus, dtype=float)
    gap = np.mod(s_plus - s, 1.0)
    if np.any(gap < COINCIDENT_TOL) or np.any(gap > 1.0 - COINCIDENT_TOL):
        raise CoincidentPoints("h(s, s+) needs s+ != s (mod 1)")
    theta = curve.theta_of_s(s)
    theta_plus = curve.theta_of_s(s + gap)
    length, v, vp, _, _ = chord_geometry(curve, theta, theta_plus - theta)
    length = length.reshape(theta.shape)
    v = v.reshape(theta.shape)
    vp = vp.reshape(theta.shape)
    rho = curve.radius_at(theta)
    rho_p = curve.radius_at(theta_plus)
    sv, svp = np.sin(v), np.sin(vp)
    return ChordData(
        s=s,
        s_plus=s + gap,
        length=length,
        v=v,
        v_plus=vp,
        h=-length,
        d1=np.cos(v),
        d2=-np.cos(vp),
        d12=-sv * svp / length,
        d11=sv / rho - sv * sv / length,
        d22=svp / rho_p - svp * svp / length,
    )


@dataclass(frozen=True)
class Orbit:
    """Finite orbit segment; indexable as a sequence of :class:`BilliardState`."""

    s: np.ndarray
    v: np.ndarray

    def __len__(self):
        return len(self.s)

    def __getitem__(self, i):
        return BilliardState(float(self.s[i]), float(self.v[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def to_csv(self, path_or_file):
        """Write ``step,s,v`` rows at 17 significant digits."""
        write_orbit_csv(path_or_file, [self])


def orbit(curve: BoundaryCurve, state: BilliardState, n: int, v_min: float = V_MIN) -> Orbit:
    """``n`` successive bounces from ``state`` (``n + 1`` states including the start)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    _check_angles(state.v, v_min)
    theta0 = float(curve.theta_of_s(np.asarray(state.s, dtype=float)))
    thetas, vs = kernels.orbit(curve.rc, curve.rs, theta0, float(state.v), int(n))
    _check_angles(vs, v_min)
    s = curve.s_of_theta(thetas)
    s[0] = state.s
    return Orbit(s, vs)


def write_orbit_csv(path_or_file, orbits, extra_columns=None):
    """Dump orbits as ``step,s,v`` (plus an ``orbit`` column when several)."""
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        writer = csv.writer(fh, lineterminator="\n")
        multi = len(orbits) > 1
        writer.writerow((["orbit"] if multi else []) + ["step", "s", "v"])
        for k, orb in enumerate(orbits):
            for i in range(len(orb)):
                row = [i, f"{orb.s[i]:.17g}", f"{orb.v[i]:.17g}"]
                writer.writerow(([k] if multi else []) + row)
    finally:
        if own:
            fh.close()
