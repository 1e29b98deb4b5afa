"""Exception types shared across the package."""


class SpecError(ValueError):
    """A workload config document is malformed or violates a structural invariant."""


class TraceError(ValueError):
    """A trace file or trace object is malformed.

    ``line`` is the 1-based line number of the first offending row when the
    error came from parsing a file, else None.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InstabilityError(ValueError):
    """Total load meets or exceeds the budget, so no allocation can keep up."""


class BruteForceError(ValueError):
    """The exhaustive grid search was asked for something it cannot enumerate."""
