"""Batch toolkit for ranking tweets by check-worthiness."""

from .errors import ConvergenceError, DataError

__version__ = "0.1.0"

__all__ = ["ConvergenceError", "DataError", "__version__"]
