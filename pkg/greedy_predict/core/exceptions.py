"""Custom exception classes for greedy_predict.

Every error carries the process exit code the CLI reports for it.
"""

from typing import Optional

from pydantic import ValidationError


class GreedyPredictError(Exception):
    """Base exception for greedy_predict."""

    exit_code = 1

    def __init__(self, message: str = "An error occurred"):
        self.message = message
        super().__init__(self.message)


class ConfigError(GreedyPredictError):
    """Raised when a configuration value or key is invalid."""

    exit_code = 2


class MalformedInputError(GreedyPredictError):
    """Raised when an input file cannot be parsed."""

    exit_code = 2

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class DegenerateColumnError(GreedyPredictError):
    """Raised when a regressor has (numerically) zero empirical norm."""

    exit_code = 3

    def __init__(self, column: int, name: Optional[str] = None, norm: float = 0.0):
        self.column = column
        self.name = name
        self.norm = norm
        label = f"'{name}'" if name else str(column)
        super().__init__(f"Degenerate column {label}: empirical norm {norm:.3g}")


class DimensionMismatchError(GreedyPredictError):
    """Raised when array shapes disagree."""
    pass


class StreamingScaleError(GreedyPredictError):
    """Raised when batches standardized with different scales are merged."""
    pass


class CombinatorialBlowupError(GreedyPredictError):
    """Raised when an exhaustive subset enumeration exceeds the configured cap."""
    pass


class AllExcludedError(GreedyPredictError):
    """Raised when every regressor is excluded from selection."""
    pass


class AiccUndefinedError(GreedyPredictError):
    """Raised when the corrected AIC denominator is not positive."""
    pass


class NeedsRawDesignError(GreedyPredictError):
    """Raised when an n-space quantity is requested from sufficient statistics only."""
    pass


class EmptyFoldError(GreedyPredictError):
    """Raised when a cross-validation fold has no rows."""

    exit_code = 2


class NoConvergenceError(GreedyPredictError):
    """Raised when an iterative solver hits its iteration cap."""
    pass


class SingularError(GreedyPredictError):
    """Raised when a Gram submatrix is numerically singular."""
    pass


class TableFailureError(GreedyPredictError):
    """Raised when too many simulation replications failed."""

    exit_code = 4


def config_error(exc: ValidationError) -> ConfigError:
    """Convert a pydantic validation error into a ConfigError."""
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err.get("loc", ())) or "config"
        parts.append(f"{loc}: {err.get('msg', 'invalid value')}")
    return ConfigError("; ".join(parts))


def exit_code_for(exc: BaseException) -> int:
    """Exit code for an exception raised by a CLI command."""
    if isinstance(exc, GreedyPredictError):
        return exc.exit_code
    if isinstance(exc, ValidationError):
        return ConfigError.exit_code
    return 1
