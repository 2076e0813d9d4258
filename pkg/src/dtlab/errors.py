"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI and service:
UsageError -> 2, PrecisionError -> 3, check failures -> 1.
"""


class DTLabError(Exception):
    """Base class for all package errors."""


class UsageError(DTLabError):
    """Invalid argument, malformed config, or violated precondition."""


class PrecisionError(DTLabError):
    """Input too sparse / ill-conditioned to meet the stated numerical contract."""
