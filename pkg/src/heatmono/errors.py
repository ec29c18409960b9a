"""Exception hierarchy shared by all heatmono modules."""

from __future__ import annotations


class HeatmonoError(Exception):
    """Base class for every error raised by this package."""


class InvalidMeasure(HeatmonoError, ValueError):
    pass


class InvalidExponents(HeatmonoError, ValueError):
    pass


class CapExceeded(HeatmonoError):
    """A resource guard (atom count, enumeration size, matrix size) tripped."""


class NonConvergence(HeatmonoError):
    """Successive refinements failed to agree within the requested tolerance."""

    def __init__(self, message: str, *, last_change: float | None = None, depth: int | None = None):
        super().__init__(message)
        self.last_change = last_change
        self.depth = depth


class DomainTooWide(HeatmonoError):
    """The spatial grid needed for a quadrature would exceed the sample cap."""


class NotCoprime(HeatmonoError, ValueError):
    pass


class EvenIntegerQ(HeatmonoError, ValueError):
    """Counterexamples only exist for q that is not an even integer."""


class InconclusiveCertificate(HeatmonoError):
    def __init__(self, message: str, *, value: float, tail_bound: float):
        super().__init__(message)
        self.value = value
        self.tail_bound = tail_bound


class SweepPointError(HeatmonoError):
    """Wraps a route failure at one grid point of a sweep."""

    def __init__(self, index: int, t: float, cause: Exception):
        super().__init__(f"sweep failed at index {index} (t={t!r}): {cause}")
        self.index = index
        self.t = t
        self.cause = cause
