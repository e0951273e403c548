"""Batched adaptive Gauss-Legendre quadrature over many independent intervals."""
from __future__ import annotations

import numpy as np

from .errors import QuadratureStall

MAX_LEVEL = 20


def integrate(f, a, b, rtol=1e-12, atol=0.0, order=20, max_level=MAX_LEVEL):
    """Integrate ``f`` over ``[a_i, b_i]`` for every i at once.

    ``f(points, index)`` receives a flat array of abscissae and, for each, the
    index ``i`` of the integral it belongs to; it returns the integrand values.
    Each panel is compared with its two halves; panels whose difference exceeds
    their share of ``max(rtol * int|f|, atol)`` are bisected (``atol`` may be
    given per integral).  Raises
    :class:`QuadratureStall` when bisection goes deeper than ``max_level``.
    """
    a, b, atol = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float),
                                     np.asarray(atol, dtype=float))
    shape = a.shape
    a = a.ravel()
    b = b.ravel()
    atol = atol.ravel()
    m = a.size
    gx, gw = np.polynomial.legendre.leggauss(order)

    def panel(idx, lo, hi):
        half = 0.5 * (hi - lo)
        pts = (0.5 * (hi + lo))[:, None] + half[:, None] * gx
        vals = np.asarray(f(pts.ravel(), np.repeat(idx, order)), dtype=float).reshape(pts.shape)
        return half * (vals @ gw), np.abs(half) * (np.abs(vals) @ gw)

    idx = np.arange(m)
    lo, hi = a, b
    whole, mag = panel(idx, lo, hi)
    scale = np.maximum(rtol * mag, atol)
    width = np.abs(b - a)
    width[width == 0.0] = 1.0
    total = np.zeros(m)
    for _ in range(max_level + 1):
        mid = 0.5 * (lo + hi)
        left, _ = panel(idx, lo, mid)
        right, _ = panel(idx, mid, hi)
        halves = left + right
        ok = np.abs(halves - whole) <= scale[idx] * np.abs(hi - lo) / width[idx]
        np.add.at(total, idx[ok], halves[ok])
        if np.all(ok):
            return total.reshape(shape)
        keep = ~ok
        idx = np.concatenate([idx[keep], idx[keep]])
        lo, hi = np.concatenate([lo[keep], mid[keep]]), np.concatenate([mid[keep], hi[keep]])
        whole = np.concatenate([left[keep], right[keep]])
    raise QuadratureStall(f"adaptive quadrature exceeded {max_level} bisection levels on {idx.size} panels")


def fixed_gl(order):
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w
