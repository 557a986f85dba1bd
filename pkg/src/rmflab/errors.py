"""Exception types shared across the package.

Domain and range violations raise plain ``ValueError``; the classes here
mark conditions that callers (notably the CLI) must tell apart.
"""


class ScaleError(RuntimeError):
    """An exact computation was refused because it exceeds its size budget."""


class ContractViolation(ValueError):
    """An input breaks a documented precondition (e.g. a non-square-free
    argument to a kernel operation)."""


class DegenerateIntervalError(ValueError):
    """The interval contains no square-free integer (S = 0) where S >= 1
    is required."""
