"""Shared exception types.

The CLI maps these onto exit codes: usage/config problems exit 1,
numerical failures exit 2, I/O problems exit 3.
"""


class UsageError(ValueError):
    """A caller violated an operation's contract (wrong side tag, bad
    window, order mismatch, malformed input)."""


class ConfigError(UsageError):
    """Config file problem. Carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NonConvergenceError(ArithmeticError):
    """A numeric extraction or estimator failed to settle within its
    pinned tolerance."""
