"""Numerical toolkit for contact jets of vector-valued maps."""

__version__ = "0.1.0"
