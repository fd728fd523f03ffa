"""Exception types shared across the toolkit.

The CLI maps these to exit codes: usage errors exit 1, DataError (and
ValueError from contract checks) exit 2, NumericError exit 3.
"""


class ReidError(Exception):
    """Base class for toolkit errors."""


class DataError(ReidError):
    """Bad input data: unreadable image, malformed manifest or cache, digest mismatch."""


class NumericError(ReidError):
    """Numerical failure: non-positive-definite covariance, singular projected matrix."""
