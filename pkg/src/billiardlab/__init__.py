"""Convex billiards near the boundary: Lazutkin charts, Hamiltonian suspension, Aubry-Mather tools."""
from .boundary import BoundaryCurve, RadiusProfile, build_curve, circle, oval
from .billiard import BilliardState, generating_h, orbit, reflect
from .kernels import BACKEND
from .lazutkin import LazutkinChart, LazutkinState, build_chart, lazutkin_map, tilde_h

__version__ = "0.1.0"
