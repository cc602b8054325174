"""Numerical toolkit for non-selfadjoint quadratic differential operators."""

__version__ = "0.1.0"
