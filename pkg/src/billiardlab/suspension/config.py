"""Parameters of the suspension construction."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

from ..errors import ConfigError


@dataclass(frozen=True)
class SuspensionConfig:
    """Construction parameters.

    ``kappa`` is the shear time, ``eps`` the gap at which the cutoff starts
    (the generating function is exactly cubic beyond ``sqrt(eps)``), ``m_w``
    the mollifier half-width and ``[t1, t2]`` the blend window.  ``l_min`` and
    ``l_max`` bound the action range of the grids.
    """

    kappa: float = 0.15
    eps: float = 0.1
    m_w: float = 0.05
    t1: float | None = None
    t2: float | None = None
    l_min: float = 1e-7
    l_max: float = 1e-3
    quad_rtol: float = 1e-12
    ode_rtol: float = 1e-11
    legendre_tol: float = 1e-14
    # spectral grid of the middle-window Hamiltonian remainder
    h_nx: int = 64
    h_ny: int = 10
    h_nt: int = 12
    # spectral grid of the generating functions on the blend window
    w_nx: int = 64
    w_ny: int = 10
    w_nt: int = 12
    # positivity grid
    pos_nx: int = 32
    pos_nl: int = 128
    pos_nt: int = 64
    recon_tol: float = 1e-5

    def __post_init__(self):
        k = self.kappa
        if self.t1 is None:
            object.__setattr__(self, "t1", k + self.m_w)
        if self.t2 is None:
            object.__setattr__(self, "t2", self.t1 + k / 3.0)
        self.validate()

    def validate(self):
        k, m, t1, t2 = self.kappa, self.m_w, self.t1, self.t2
        if not 0.0 < k < 0.2:
            raise ConfigError(f"kappa must lie in (0, 1/5), got {k}")
        if not 0.0 < m < k:
            raise ConfigError(f"mollifier half-width must lie in (0, kappa), got {m}")
        if not k + m <= t1 < t2 <= 2.0 * k:
            raise ConfigError(f"blend window [{t1}, {t2}] must satisfy kappa + m_w <= t1 < t2 <= 2 kappa")
        if not t2 - t1 > k / 4.0:
            raise ConfigError(f"blend window length {t2 - t1} must exceed kappa / 4")
        if not 0.0 < self.eps < 1.0:
            raise ConfigError("eps must lie in (0, 1)")
        if not 0.0 < self.l_min < self.l_max:
            raise ConfigError("need 0 < l_min < l_max")
        if math.sqrt(2.0 * self.l_max) * 1.2 >= self.eps:
            raise ConfigError("l_max too large: its gap reaches the cutoff scale eps")
        for name in ("h_nx", "w_nx", "pos_nx"):
            n = getattr(self, name)
            if n < 4 or n % 2:
                raise ConfigError(f"{name} must be an even integer >= 4")
        for name in ("h_ny", "h_nt", "w_ny", "w_nt", "pos_nl", "pos_nt"):
            if getattr(self, name) < 2:
                raise ConfigError(f"{name} must be >= 2")

    @property
    def c(self):
        """Length ``1 - 2 kappa`` of the middle window."""
        return 1.0 - 2.0 * self.kappa

    @property
    def l_top(self):
        """Upper action of the spectral tables (headroom above ``l_max``)."""
        return 1.25 * self.l_max

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown suspension keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
