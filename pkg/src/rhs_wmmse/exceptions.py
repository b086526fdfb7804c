"""Exception types raised across the package."""

from __future__ import annotations


class RHSError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(RHSError, ValueError):
    """An argument is outside its admissible domain."""


class SingularityError(RHSError, ValueError):
    """Two points coincide where a field or coupling term is singular."""


class IllConditionedCouplingError(RHSError, ArithmeticError):
    """The coupled operator is not safely invertible.

    Raised when the spectral radius of ``D(m) @ Xi`` reaches ``1 - margin``.
    """

    def __init__(self, radius: float, margin: float):
        self.radius = radius
        self.margin = margin
        super().__init__(
            f"spectral radius of D(m)Xi is {radius:.6g}, "
            f"must stay below {1.0 - margin:.6g}"
        )


class NumericFailure(RHSError, ArithmeticError):
    """An iterative numeric routine failed to bracket or converge."""


class RankDeficiencyError(RHSError, ArithmeticError):
    """Stacked effective channels are not full row rank (ZF impossible)."""


class ConfigError(RHSError, ValueError):
    """Configuration could not be parsed or failed validation."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)
