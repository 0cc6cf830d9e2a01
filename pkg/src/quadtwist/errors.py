"""Shared error types."""


class BudgetError(RuntimeError):
    """An exhaustive computation would exceed its stated budget.

    Carries the estimate so callers (and the CLI, which maps this to
    exit code 3) can report how far over budget the request was.
    """

    def __init__(self, message: str, estimate: int | None = None):
        super().__init__(message)
        self.estimate = estimate


class InvariantError(AssertionError):
    """An internal consistency check failed; indicates a bug, not bad input."""
