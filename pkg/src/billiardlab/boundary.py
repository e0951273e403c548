"""Strictly convex closed curves described by their radius of curvature.

A curve is given by ``r(psi)``, the radius of curvature as a function of the
tangent angle ``psi``, as a finite Fourier series without frequency-1 terms
(so the curve closes).  After uniform scaling to unit perimeter all geometry
is available in closed form:

* arc length ``s(psi) = int r``,
* the support function ``p`` solving ``p'' + p = r`` (Steiner point at the origin),
* the embedding ``P = p n + p' t`` with outward normal ``n`` and tangent ``t``.

Internally curves are parametrised by the outward-normal angle
``theta = psi - pi/2``; ``s = 0`` is the point whose outward normal is ``+x``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ClosureViolation, ConfigError, NonConvex

CONVEXITY_GRID = 8192
CLOSURE_TOL = 1e-14


@dataclass(frozen=True)
class RadiusProfile:
    """Fourier coefficients of r(psi); ``cos[k]``, ``sin[k]`` multiply cos(k psi), sin(k psi)."""

    cos: tuple[float, ...]
    sin: tuple[float, ...] = ()

    def __post_init__(self):
        n = max(len(self.cos), len(self.sin), 1)
        object.__setattr__(self, "cos", tuple(float(c) for c in self.cos) + (0.0,) * (n - len(self.cos)))
        object.__setattr__(self, "sin", tuple(float(c) for c in self.sin) + (0.0,) * (n - len(self.sin)))

    @classmethod
    def circle(cls, radius=1.0):
        return cls((radius,))

    @classmethod
    def from_samples(cls, values, tol=1e-15):
        """Profile from samples of r on a uniform psi grid over [0, 2 pi)."""
        values = np.asarray(values, dtype=float)
        n = len(values)
        spec = np.fft.rfft(values) / n
        cos = 2.0 * spec.real
        sin = -2.0 * spec.imag
        cos[0] = spec[0].real
        if n % 2 == 0:
            cos[-1] = spec[-1].real
            sin[-1] = 0.0
        scale = abs(cos[0])
        keep = np.nonzero((np.abs(cos) > tol * scale) | (np.abs(sin) > tol * scale))[0]
        kmax = int(keep.max()) + 1 if keep.size else 1
        cos, sin = cos[:kmax], sin[:kmax]
        if kmax > 1:
            cos[1] = sin[1] = 0.0
        return cls(tuple(cos), tuple(sin))

    @classmethod
    def from_json(cls, text):
        """Parse ``{"cos": [...], "sin": [...]}``; frequency-1 entries must be absent or zero."""
        try:
            data = json.loads(text) if isinstance(text, str) else dict(text)
        except (json.JSONDecodeError, TypeError, ValueError) as exc:
            raise ConfigError(f"profile is not valid JSON: {exc}") from exc
        unknown = set(data) - {"cos", "sin"}
        if unknown:
            raise ConfigError(f"unknown profile keys: {sorted(unknown)}")
        if "cos" not in data:
            raise ConfigError("profile needs a 'cos' list")
        try:
            return cls(tuple(data["cos"]), tuple(data.get("sin", ())))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"profile coefficients must be numbers: {exc}") from exc

    @classmethod
    def load(cls, path):
        try:
            return cls.from_json(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read profile {path}: {exc}") from exc

    def to_json(self):
        return json.dumps({"cos": list(self.cos), "sin": list(self.sin)})

    def __call__(self, psi):
        return kernels.series(np.asarray(self.cos), np.asarray(self.sin), np.asarray(psi, dtype=float))

    def check(self):
        """Raise if the profile violates closure or strict convexity."""
        if len(self.cos) > 1 and (abs(self.cos[1]) > CLOSURE_TOL or abs(self.sin[1]) > CLOSURE_TOL):
            raise ClosureViolation(
                f"frequency-1 coefficients must vanish, got cos={self.cos[1]!r}, sin={self.sin[1]!r}"
            )
        grid = np.linspace(0.0, 2.0 * np.pi, CONVEXITY_GRID, endpoint=False)
        rmin = float(np.min(self(grid)))
        if not rmin > 0.0:
            raise NonConvex(f"radius of curvature must be positive, min over grid is {rmin:.6g}")


def _rotate_to_normal_angle(cos, sin):
    """Coefficients of r(theta + pi/2) given those of r(psi)."""
    k = np.arange(len(cos))
    ck = np.cos(0.5 * np.pi * k)
    sk = np.sin(0.5 * np.pi * k)
    # cos(k pi / 2) and sin(k pi / 2) are exactly 0, +-1
    ck = np.round(ck)
    sk = np.round(sk)
    a = np.asarray(cos)
    b = np.asarray(sin)
    return a * ck + b * sk, -a * sk + b * ck


@dataclass(frozen=True, eq=False)
class BoundaryCurve:
    """Unit-perimeter strictly convex curve; immutable after :func:`build_curve`."""

    profile: RadiusProfile
    scale: float
    rc: np.ndarray = field(repr=False)
    rs: np.ndarray = field(repr=False)
    pc: np.ndarray = field(repr=False)
    ps: np.ndarray = field(repr=False)

    @property
    def is_circle(self):
        return not (np.any(self.rc[1:]) or np.any(self.rs[1:]))

    @property
    def nharm(self):
        return len(self.rc)

    # -- parametrisation by normal angle -------------------------------------------------
    def theta_of_s(self, s):
        s = np.asarray(s, dtype=float)
        return kernels.invert_integrated(self.rc, self.rs, s).reshape(s.shape)

    def s_of_theta(self, theta):
        theta = np.asarray(theta, dtype=float)
        return kernels.integrated(self.rc, self.rs, theta).reshape(theta.shape)

    def radius_at(self, theta, deriv=0):
        """d^k r / d theta^k at normal angle theta."""
        theta = np.asarray(theta, dtype=float)
        return kernels.series(self.rc, self.rs, theta, deriv).reshape(theta.shape)

    def point_at(self, theta):
        theta = np.asarray(theta, dtype=float)
        p = kernels.series(self.pc, self.ps, theta).reshape(theta.shape)
        dp = kernels.series(self.pc, self.ps, theta, 1).reshape(theta.shape)
        c, s = np.cos(theta), np.sin(theta)
        return np.stack([p * c - dp * s, p * s + dp * c], axis=-1)

    # -- arc-length queries -----------------------------------------------------------------
    def point(self, s):
        return self.point_at(self.theta_of_s(s))

    def tangent_angle(self, s):
        return self.theta_of_s(s) + 0.5 * np.pi

    def radius_of_curvature(self, s):
        return self.radius_at(self.theta_of_s(s))

    def radius_derivatives(self, s):
        """(rho, d rho/ds, d^2 rho/ds^2) at arc length s."""
        th = self.theta_of_s(s)
        r = self.radius_at(th)
        r1 = self.radius_at(th, 1)
        r2 = self.radius_at(th, 2)
        return r, r1 / r, (r2 * r - r1 * r1) / r**3

    def sample_profile(self, n=256):
        """Radius of curvature sampled on a uniform tangent-angle grid (unit perimeter)."""
        psi = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        return self.radius_at(psi - 0.5 * np.pi)

    def summary(self):
        grid = np.linspace(0.0, 2.0 * np.pi, CONVEXITY_GRID, endpoint=False)
        r = self.radius_at(grid)
        return {
            "perimeter": 1.0,
            "scale": self.scale,
            "min_radius_of_curvature": float(r.min()),
            "max_radius_of_curvature": float(r.max()),
            "harmonics": int(self.nharm),
            "is_circle": bool(self.is_circle),
        }


def build_curve(profile: RadiusProfile) -> BoundaryCurve:
    """Validate ``profile`` and return the unit-perimeter curve it describes."""
    profile.check()
    a0 = profile.cos[0]
    scale = 1.0 / (2.0 * math.pi * a0)
    rc, rs = _rotate_to_normal_angle(profile.cos, profile.sin)
    rc = np.ascontiguousarray(rc * scale, dtype=float)
    rs = np.ascontiguousarray(rs * scale, dtype=float)
    k = np.arange(len(rc), dtype=float)
    with np.errstate(divide="ignore"):
        factor = np.where(k == 1, 0.0, 1.0 / (1.0 - k * k))
    pc = np.ascontiguousarray(rc * factor)
    ps = np.ascontiguousarray(rs * factor)
    return BoundaryCurve(profile, scale, rc, rs, pc, ps)


def point(curve, s):
    return curve.point(s)


def tangent_angle(curve, s):
    return curve.tangent_angle(s)


def radius_of_curvature(curve, s):
    return curve.radius_of_curvature(s)


def circle():
    return build_curve(RadiusProfile.circle())


def oval(eps=0.3, k=2):
    """``r(psi) = 1 + eps cos(k psi)``; the default is the standard test oval."""
    cos = [1.0] + [0.0] * (k - 1) + [eps]
    return build_curve(RadiusProfile(tuple(cos)))
