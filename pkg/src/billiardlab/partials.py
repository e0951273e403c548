"""Container for a two-point generating function value and its partials."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Partials:
    """h(x, X) with first and second partial derivatives (arrays broadcast together)."""

    h: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    h11: np.ndarray
    h12: np.ndarray
    h22: np.ndarray

    def take(self, mask):
        return Partials(*(np.asarray(getattr(self, f))[mask] for f in self.__dataclass_fields__))
