"""Exception hierarchy shared across the package."""


class DualFLError(Exception):
    """Base class for all errors raised by dualfl."""


class ConfigurationError(DualFLError, ValueError):
    """Inconsistent sizes, unknown keys or invalid hyperparameters."""


class InputError(DualFLError, ValueError):
    """Non-finite or otherwise malformed numerical input."""


class DomainError(DualFLError, ValueError):
    """A parameter lies outside the range where the math is defined."""


class ConstructionError(DualFLError, ValueError):
    """A problem family could not be built from the supplied data."""


class DataError(DualFLError, ValueError):
    """Dataset file is empty, malformed or has labels out of range."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConjugateError(DualFLError, RuntimeError):
    """Numeric conjugate evaluation did not reach its tolerance."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class LocalSolveIncomplete(DualFLError, RuntimeError):
    """Local solver hit its iteration cap; carries the partial report."""

    def __init__(self, report):
        super().__init__(
            f"local solve stopped after {report.iters} iterations "
            f"with gap {report.gap:.3e}"
        )
        self.report = report


class ReferenceSolveError(DualFLError, RuntimeError):
    """Reference solver did not reach its tolerance within budget."""


class FitError(DualFLError, ValueError):
    """Rate fit received a non-positive or too short sequence."""
