"""Exception types raised across the package."""


class CorrDivError(Exception):
    """Base class for all package errors."""


class InvalidInputError(CorrDivError, ValueError):
    """Malformed numerical input (shape, symmetry, sign)."""


class DomainError(CorrDivError, ValueError):
    """Arguments outside the region where a closed form is defined."""


class GeometryError(DomainError):
    """Inconsistent system dimensions (e.g. rG > M)."""


class NumericalIntegrationError(CorrDivError, ArithmeticError):
    """Quadrature failed to reach the requested agreement."""


class DegenerateSpectrumError(CorrDivError, ArithmeticError):
    """Eigenvalue spectrum with empty support."""


class FitError(CorrDivError, ArithmeticError):
    """Affine high-SNR fit produced a non-positive slope."""


class StructureViolationError(CorrDivError):
    """Group eigenspaces are not orthogonal to the required tolerance."""


class ConfigError(CorrDivError, ValueError):
    """Bad experiment configuration or unknown preset."""


class ConvergenceError(CorrDivError, ArithmeticError):
    """Iterative solver exhausted its iteration budget.

    Attributes
    ----------
    best : object
        Best iterate found before giving up (for waterfilling, a
        ``PowerAllocation``).
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
