"""Rejection ABC with integral-probability-semimetric discrepancies."""

__version__ = "0.1.0"
