"""Quantum-logic spectroscopy of molecular ions via motional cat states."""
from .errors import (
    CatalogError,
    InfeasibleAlpha,
    NormDrift,
    NotFound,
    NumericalError,
    QLSError,
    StalledGeneration,
    TruncationOverflow,
)

__version__ = "0.1.0"

__all__ = [
    "CatalogError",
    "InfeasibleAlpha",
    "NormDrift",
    "NotFound",
    "NumericalError",
    "QLSError",
    "StalledGeneration",
    "TruncationOverflow",
    "__version__",
]
