"""Numerical checks of heat-flow monotonicity for L^q norms of Fourier transforms."""

__version__ = "0.1.0"
