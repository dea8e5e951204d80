"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: usage errors exit 1, DataError (and
other ValueError/OSError) exit 2, ConvergenceError exits 3.
"""


class DataError(ValueError):
    """A file, record, or argument violates a documented data contract."""


class ConvergenceError(RuntimeError):
    """A numerical routine failed to reach its stopping criterion."""
