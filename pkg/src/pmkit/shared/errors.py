"""Error types carrying stable machine-readable codes."""

from typing import Any

EXIT_RUNTIME = 1
EXIT_USAGE = 2


class PmkitError(Exception):
    """Base error with a stable ``code`` and the CLI exit code it maps to."""

    code = "runtime_error"
    exit_code = EXIT_RUNTIME

    def __init__(self, message: str, **context: Any) -> None:
        super().__init__(message)
        self.message = message
        self.context = context

    def to_dict(self) -> dict[str, Any]:
        """Return the error as a JSON-ready mapping."""
        return {"code": self.code, "message": self.message, **self.context}


class ValidationFailure(PmkitError, ValueError):
    """Input outside the documented domain."""

    code = "invalid_input"
    exit_code = EXIT_USAGE


class ParseError(ValidationFailure):
    """Malformed input file; context names the line and column."""

    code = "parse_error"


class InsufficientDataError(ValidationFailure):
    """Not enough observations for an estimator."""

    code = "insufficient_data"


class InsufficientHistoryError(ValidationFailure):
    """A covariate window is not covered by the available series."""

    code = "insufficient_history"


class InsufficientCovariatesError(ValidationFailure):
    """Covariate series needed for Cox fitting or updating are missing."""

    code = "insufficient_covariates"


class UnknownUnitError(ValidationFailure):
    """A unit id is not part of the farm."""

    code = "unknown_unit"


class InstanceTooLargeError(ValidationFailure):
    """Problem too large for exhaustive enumeration."""

    code = "instance_too_large"


class NonConvergenceError(PmkitError):
    """An iterative method stopped without meeting its tolerance."""

    code = "non_convergence"


class GridTooShortError(PmkitError):
    """The minimiser sits on the last point of the evaluation grid."""

    code = "grid_too_short"
