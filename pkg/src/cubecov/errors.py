"""Exception hierarchy.

Every domain failure derives from :class:`CubeCovError`; the CLI maps these
to exit code 1.
"""


class CubeCovError(Exception):
    """Base class for domain errors."""


class PreconditionError(CubeCovError, ValueError):
    """An argument violates a documented precondition."""


class MovementLogError(CubeCovError, ValueError):
    """A movement log is not well chained."""


class CoverageSizeError(CubeCovError):
    """Exact coverage verification refused because the arrangement is too large."""


class QuadratureError(CubeCovError, ArithmeticError):
    """Adaptive quadrature did not converge."""


class DegenerateFitError(CubeCovError, ValueError):
    """Not enough spread in the data for an exponent fit."""
