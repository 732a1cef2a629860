"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """An argument violates an operation's precondition."""


class ZeroProbabilityContext(ValueError):
    """Conditioning on an event of probability zero."""


class ConvergenceFailure(RuntimeError):
    """Iterative scaling hit its iteration cap before reaching tolerance."""

    def __init__(self, message: str, achieved_error: float, iterations: int):
        super().__init__(message)
        self.achieved_error = achieved_error
        self.iterations = iterations


class NumericFailure(RuntimeError):
    """A numerical backend (LP solver) reported failure."""


class FormatError(ValueError):
    """A JSON input file does not match the expected schema."""
