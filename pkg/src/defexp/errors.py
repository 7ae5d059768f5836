"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations


class DefExpError(Exception):
    """Base class. ``kind`` is the stable identifier used in CLI error objects."""

    kind = "error"

    def __init__(self, message: str, path: str | None = None):
        super().__init__(message)
        self.message = message
        self.path = path

    def to_dict(self) -> dict:
        return {"kind": self.kind, "message": self.message, "path": self.path}


class InputError(DefExpError, ValueError):
    kind = "input"


class DomainError(InputError):
    kind = "domain"


class ValidationError(InputError):
    kind = "validation"


class UnsupportedIdentityError(InputError):
    kind = "unsupported_identity"


class NumericalFailure(DefExpError, ArithmeticError):
    kind = "numerical_failure"

    def __init__(self, message: str, path: str | None = None, best=None):
        super().__init__(message, path)
        self.best = best


class QuadratureError(NumericalFailure):
    kind = "quadrature_failure"
