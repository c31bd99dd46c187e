"""Exception types shared across the package."""


class FormatError(ValueError):
    """Malformed input text. ``line`` is 1-based, or None when not tied to a line."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class BudgetExhausted(RuntimeError):
    """A search hit its step budget before reaching a verdict."""


class InconclusiveFixing(RuntimeError):
    """Value fixing under local consistency did not produce a solution.

    Raised when the consistency hypothesis fails for an instance: either a
    fixing step finds no surviving value after earlier pins, or the final
    assignment does not satisfy the instance.
    """
