"""Capacity of spatially correlated MIMO broadcast channels with grouped users."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    ConvergenceError,
    CorrDivError,
    DegenerateSpectrumError,
    DomainError,
    FitError,
    GeometryError,
    InvalidInputError,
    NumericalIntegrationError,
    StructureViolationError,
)
