"""Bradykinesia severity scoring from hand-landmark time series."""

__version__ = "0.1.0"
