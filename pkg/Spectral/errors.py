# Spectral/errors.py

from typing import Any, Optional


class SuperResolutionError(Exception):
    """Base class for every error raised by the Spectral package."""

    kind: str = "solver"


class ParameterError(SuperResolutionError, ValueError):
    kind = "config"


class DimensionError(SuperResolutionError, ValueError):
    kind = "config"


class SeparationError(SuperResolutionError, ValueError):
    """Separation is undefined for fewer than two spikes."""


class MaskError(SuperResolutionError, ValueError):
    kind = "io"


class MatchingError(SuperResolutionError, ValueError):
    pass


class PreconditionError(SuperResolutionError, ValueError):
    """Raised when a vector would be preconditioned twice."""


class GramError(SuperResolutionError, RuntimeError):
    pass


class DegenerateDictionaryError(GramError):
    pass


class IllConditionedError(GramError):
    pass


class FiniteDifferenceError(SuperResolutionError, RuntimeError):
    def __init__(self, message: str, coordinate: int):
        super().__init__(message)
        self.coordinate = coordinate


class InfeasibleInstanceError(SuperResolutionError, ValueError):
    kind = "config"


class SolverError(SuperResolutionError, RuntimeError):
    """A solver failure with the partial iteration trace attached."""

    def __init__(self, message: str, trace: Optional[Any] = None):
        super().__init__(message)
        self.trace = trace


class SampleFileError(SuperResolutionError, ValueError):
    kind = "io"

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        context = []
        if line is not None:
            context.append(f"line {line}")
        if field is not None:
            context.append(f"field '{field}'")
        suffix = f" ({', '.join(context)})" if context else ""
        super().__init__(f"{message}{suffix}")
        self.line = line
        self.field = field


class ConfigError(SuperResolutionError, ValueError):
    kind = "config"
