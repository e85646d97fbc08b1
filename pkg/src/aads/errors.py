"""Exception hierarchy for the AAdS laboratory.

Every failure mode that a caller can trigger through valid-looking input has
its own class, so tests and the CLI can tell configuration mistakes apart
from genuine numerical breakdowns (exit codes 2 vs 3).
"""


class AadsError(Exception):
    """Base class for all library errors."""


class DomainError(AadsError):
    """Point lies outside the registered chart domain (names the bound)."""


class StencilError(DomainError):
    """A finite-difference stencil would leave the chart domain."""


class CoverageError(DomainError):
    """Event exists but is not covered by the requested chart."""


class ConstructionError(AadsError):
    """Invalid parameters passed to a model builder."""


class ConfigurationError(AadsError):
    """Missing or inconsistent registration (e.g. no conformal closure)."""


class DegeneratePlaneError(AadsError):
    """Tangent plane on which the metric is degenerate."""


class NonConvexError(AadsError):
    """Geodesic shooting failed to converge; pair not in a convex patch."""


class AmbiguousGeodesicError(AadsError):
    """Multiple distinct connecting geodesics were found."""


class SingularityError(AadsError):
    """Integrator step underflow near a curvature singularity."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class OffHorizonError(AadsError):
    """A point claimed to be on a wedge horizon is not, within tolerance."""


class ExtrapolationDivergenceError(AadsError):
    """A Richardson extrapolation failed its ratio test."""


class UnsupportedError(AadsError):
    """Operation is only defined for a different class of models."""


class PreconditionError(AadsError):
    """A declared operation precondition is violated."""
