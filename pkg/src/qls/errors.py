"""Exception types shared across the package."""


class QLSError(Exception):
    """Base class for all errors raised by qls."""


class NumericalError(QLSError):
    """A numerical run could not be trusted (maps to CLI exit code 4)."""


class NormDrift(NumericalError):
    pass


class TruncationOverflow(NumericalError):
    pass


class StalledGeneration(QLSError):
    """Cat generation stopped growing before reaching its target."""


class InfeasibleAlpha(QLSError):
    """Requested cat displacement lies beyond the all-orders cap."""


class NotFound(QLSError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "not found"


class CatalogError(QLSError, ValueError):
    """Catalog document violates the schema."""
