"""Error types shared across the package.

Every error carries a short machine-readable ``code`` so the CLI can emit a
structured record without string matching.
"""


class AgnosticErmError(Exception):
    """Base class for all package errors."""

    code = "error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def to_record(self) -> dict:
        rec = {"error": self.code, "message": str(self)}
        rec.update({k: _jsonable(v) for k, v in self.details.items()})
        return rec


def _jsonable(v):
    if isinstance(v, (str, int, float, bool)) or v is None:
        return v
    if isinstance(v, (list, tuple)):
        return [_jsonable(u) for u in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(u) for k, u in v.items()}
    return str(v)


class InvalidParams(AgnosticErmError, ValueError):
    code = "invalid-params"


class DomainViolation(AgnosticErmError, ValueError):
    code = "domain-violation"


class ValidationError(AgnosticErmError, ValueError):
    code = "validation-error"


class PreconditionUnmet(AgnosticErmError):
    code = "precondition-unmet"


class TailNotClosedForm(AgnosticErmError):
    code = "tail-not-closed-form"


class EmptyDataset(AgnosticErmError, ValueError):
    code = "empty-dataset"


class MissingDistribution(AgnosticErmError, ValueError):
    code = "missing-dist"


class InstanceTooLarge(AgnosticErmError):
    code = "instance-too-large"


class IntervalTooWide(AgnosticErmError):
    code = "interval-too-wide"


class RateTooFast(AgnosticErmError):
    code = "rate-too-fast"


class HorizonInfeasible(AgnosticErmError):
    code = "horizon-infeasible"


class SequenceTooShort(AgnosticErmError):
    code = "sequence-too-short"


class ConstructionError(AgnosticErmError):
    code = "construction-failed"


class InsufficientGrid(AgnosticErmError, ValueError):
    code = "insufficient-grid"


class GridMismatch(AgnosticErmError, ValueError):
    code = "grid-mismatch"


class BisectionFailure(AgnosticErmError):
    code = "bisection-failure"


class Undecidable(AgnosticErmError, ArithmeticError):
    """Raised when extended-range arithmetic cannot resolve a result."""

    code = "undecidable"
