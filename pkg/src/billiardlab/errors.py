"""Exception hierarchy shared by all modules."""


class BilliardLabError(Exception):
    """Base class for every error raised by the package."""


class NonConvex(BilliardLabError, ValueError):
    """Radius-of-curvature profile is not strictly positive."""


class ClosureViolation(BilliardLabError, ValueError):
    """Profile carries frequency-1 terms, so the curve would not close."""


class DegenerateTangency(BilliardLabError):
    """Reflection angle below the configured floor; the bounce is singular."""


class CoincidentPoints(BilliardLabError, ValueError):
    """Two-point function evaluated on (numerically) coincident points."""


class FitUnstable(BilliardLabError):
    """Too few usable points for a log-log slope fit."""


class QuadratureStall(BilliardLabError):
    """Adaptive quadrature exceeded its subdivision budget."""


class InversionFail(BilliardLabError):
    """Legendre inversion could not bracket the requested momentum."""


class StepUnderflow(BilliardLabError):
    """ODE integrator step size collapsed."""


class GridTooCoarse(BilliardLabError):
    """Grid reconstruction residual exceeded its tolerance."""


class PositivityViolation(BilliardLabError):
    """Convexity (positivity) check failed at a grid point."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class NoConvergence(BilliardLabError):
    """Iterative minimisation hit its iteration cap."""


class OrderingCollapse(BilliardLabError):
    """Monotone-ordering projection kept cycling."""


class OutOfSlopeRange(BilliardLabError, ValueError):
    """Requested cohomology class lies outside the sampled slope range."""


class ConfigError(BilliardLabError, ValueError):
    """Invalid run or construction configuration."""


class OutOfChart(BilliardLabError, ValueError):
    """Coordinates outside the domain where the chart is defined."""
