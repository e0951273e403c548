"""Tensor-product spectral interpolation (Fourier x Chebyshev) with derivatives."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.fft import dct, rfft


@dataclass(frozen=True)
class FourierAxis:
    """Period-1 trigonometric interpolation on ``n`` (even) uniform nodes."""

    n: int

    @property
    def nodes(self):
        return np.arange(self.n) / self.n

    @property
    def size(self):
        return 2 * (self.n // 2 + 1)

    def analyse(self, values, axis):
        spec = rfft(values, axis=axis) / self.n
        spec = np.moveaxis(spec, axis, 0)
        a = 2.0 * spec.real
        b = -2.0 * spec.imag
        a[0] *= 0.5
        b[0] = 0.0
        a[-1] *= 0.5
        b[-1] = 0.0
        return np.moveaxis(np.concatenate([a, b], axis=0), 0, axis)

    def basis(self, x, deriv=0):
        x = np.asarray(x, dtype=float).ravel()
        k = np.arange(self.n // 2 + 1, dtype=float)
        w = 2.0 * np.pi * k
        ph = np.multiply.outer(x, w)
        c, s = np.cos(ph), np.sin(ph)
        m = deriv % 4
        # d^j/dx^j of cos and sin cycle with period four
        cb, sb = [(c, s), (-s, c), (-c, -s), (s, -c)][m]
        # exact derivatives of the interpolant (Nyquist cosine included), so
        # that gradients of tabulated Hamiltonians stay consistent off-node
        return np.concatenate([cb * w**deriv, sb * w**deriv], axis=1)


@dataclass(frozen=True)
class ChebAxis:
    """Chebyshev interpolation on first-kind nodes mapped to ``[lo, hi]``."""

    lo: float
    hi: float
    n: int

    @property
    def nodes(self):
        s = np.cos(np.pi * (np.arange(self.n) + 0.5) / self.n)
        return self.to_phys(s)

    @property
    def size(self):
        return self.n

    def to_unit(self, y):
        return (2.0 * np.asarray(y, dtype=float) - (self.lo + self.hi)) / (self.hi - self.lo)

    def to_phys(self, s):
        return 0.5 * (self.lo + self.hi) + 0.5 * (self.hi - self.lo) * np.asarray(s, dtype=float)

    def analyse(self, values, axis):
        c = dct(values, type=2, axis=axis) / self.n
        c = np.moveaxis(c, axis, 0)
        c[0] *= 0.5
        return np.moveaxis(c, 0, axis)

    def basis(self, y, deriv=0):
        s = self.to_unit(np.asarray(y, dtype=float).ravel())
        if deriv == 0:
            return C.chebvander(s, self.n - 1)
        if deriv >= self.n:
            return np.zeros((s.size, self.n))
        d = C.chebder(np.eye(self.n), m=deriv, axis=0)
        return C.chebvander(s, self.n - 1 - deriv) @ d * (2.0 / (self.hi - self.lo)) ** deriv


class TensorTable:
    """Interpolant of samples on the tensor grid of ``axes`` (values shape = node counts)."""

    def __init__(self, axes, values):
        self.axes = tuple(axes)
        values = np.asarray(values, dtype=float)
        if values.shape != tuple(ax.n for ax in self.axes):
            raise ValueError(f"values shape {values.shape} does not match axes")
        coef = values
        for i, ax in enumerate(self.axes):
            coef = ax.analyse(coef, i)
        self.coef = coef

    @classmethod
    def from_coef(cls, axes, coef):
        obj = cls.__new__(cls)
        obj.axes = tuple(axes)
        obj.coef = np.asarray(coef, dtype=float)
        return obj

    def __call__(self, *points, derivs=None):
        """Evaluate at scattered points (all coordinate arrays broadcast together)."""
        derivs = derivs or (0,) * len(self.axes)
        pts = np.broadcast_arrays(*[np.asarray(p, dtype=float) for p in points])
        shape = pts[0].shape
        out = self.coef
        for i in reversed(range(len(self.axes))):
            b = self.axes[i].basis(pts[i], derivs[i])
            if i == len(self.axes) - 1:
                out = np.einsum("mk,...k->m...", b, out)
            else:
                out = np.einsum("mk,m...k->m...", b, out)
        return out.reshape(shape)

    def contract(self, bases):
        """Evaluate with explicit basis rows per axis.

        Each entry is either an (M, K) matrix (one row per point) or a (K,)
        vector shared by all points; shared axes are contracted first.
        """
        out = self.coef
        axes = list(range(len(self.axes)))
        for i in reversed(axes):
            b = np.asarray(bases[i])
            if b.ndim == 1:
                out = np.tensordot(out, b, axes=([i], [0]))
        rows = [np.asarray(b) for b in bases if np.asarray(b).ndim == 2]
        if not rows:
            return out
        for j in reversed(range(len(rows))):
            if j == len(rows) - 1:
                out = np.einsum("mk,...k->m...", rows[j], out)
            else:
                out = np.einsum("mk,m...k->m...", rows[j], out)
        return out

    def reflected(self, axis):
        """Table of ``f`` with coordinate ``axis`` mirrored (x -> -x, or lo+hi-y)."""
        ax = self.axes[axis]
        coef = np.moveaxis(self.coef.copy(), axis, 0)
        if isinstance(ax, FourierAxis):
            coef[ax.n // 2 + 1:] *= -1.0
        else:
            coef *= ((-1.0) ** np.arange(ax.n)).reshape((-1,) + (1,) * (coef.ndim - 1))
        return TensorTable.from_coef(self.axes, np.moveaxis(coef, 0, axis))

    def grid(self, *points, derivs=None):
        """Evaluate on the outer-product grid of per-axis coordinate arrays."""
        derivs = derivs or (0,) * len(self.axes)
        out = self.coef
        for i, ax in enumerate(self.axes):
            b = ax.basis(points[i], derivs[i])
            out = np.tensordot(b, out, axes=([1], [i]))
            out = np.moveaxis(out, 0, i)
        return out
