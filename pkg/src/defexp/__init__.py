"""Deformed exponential families on finite sample spaces."""

from .conjugate import ConjugateResult, Status, alpha_star, h_full, h_v, legendre_check
from .deformations import Deformation, is_self_dual, self_duality_residual
from .errors import (DefExpError, DomainError, InputError, NumericalFailure, QuadratureError,
                     UnsupportedIdentityError, ValidationError)
from .family import PhiExponentialFamily, Tolerances, family_from_arrays, point_indicator_family
from .polytope import MarginalPolytope, SeparationCertificate
from .state_space import SampleSpace

__version__ = "0.1.0"

__all__ = [
    "ConjugateResult", "DefExpError", "Deformation", "DomainError", "InputError",
    "MarginalPolytope", "NumericalFailure", "PhiExponentialFamily", "QuadratureError",
    "SampleSpace", "SeparationCertificate", "Status", "Tolerances", "UnsupportedIdentityError",
    "ValidationError", "alpha_star", "family_from_arrays", "h_full", "h_v", "is_self_dual",
    "legendre_check", "point_indicator_family", "self_duality_residual",
]
