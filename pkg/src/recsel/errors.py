"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage errors exit with 2, data errors
with 3 and numeric failures with 4.
"""


class RecselError(Exception):
    """Base class for all recsel errors."""


class UsageError(RecselError):
    """Caller misused an interface (bad arguments, kind mismatch, missing cell)."""


class DataError(RecselError):
    """Input data is malformed or violates a precondition."""


class DomainError(DataError):
    """A numeric argument lies outside the mathematically valid domain."""


class NumericError(RecselError):
    """A numerical routine failed to reach its accuracy target."""
