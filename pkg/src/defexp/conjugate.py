"""Convex conjugates of the normalising function.

``alpha_star(eta) = sup_theta theta.eta - alpha(theta)`` is finite exactly on
the marginal polytope. On its relative interior the supremum is attained at
the unique (up to the null directions of ``H``) ``theta`` with
``grad alpha(theta) = eta`` and equals the Legendre transform. Outside the
polytope a separating functional ``(a, a0)`` makes ``theta_n = n a`` a
divergent sequence. On the relative boundary the value is finite but not
attained; we report a monotone sequence of lower bounds.

``h_v(u*) = sup_{u in V} E_p[u* u] - K(u)`` reduces to ``alpha_star`` at
``eta_j = E_p[(u* + 1) H_j]``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .errors import InputError, NumericalFailure
from .family import PhiExponentialFamily, point_indicator_family
from .polytope import SeparationCertificate

ARMIJO = 1e-4


class Status(str, enum.Enum):
    ATTAINED_INTERIOR = "attained_interior"
    FINITE_BOUNDARY = "finite_boundary"
    INFINITE_OUTSIDE = "infinite_outside"


@dataclass(frozen=True)
class ConjugateResult:
    status: Status
    value: float
    eta: np.ndarray
    theta: np.ndarray | None = None
    certificate: SeparationCertificate | None = None
    diagnostics: dict = field(default_factory=dict)
    lower_bounds: tuple = ()
    witness: tuple = ()  # (n, g(n a)) pairs along the divergent ray
    density_predicate: bool | None = None
    u_hat: np.ndarray | None = None
    stationarity_residual: float | None = None

    @property
    def attained(self) -> bool:
        return self.status is Status.ATTAINED_INTERIOR

    @property
    def finite(self) -> bool:
        return self.status is not Status.INFINITE_OUTSIDE

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "status": self.status.value,
            "value": self.value,
            "attained": self.attained,
            "eta": self.eta.tolist(),
        }
        if self.theta is not None:
            out["theta_hat"] = self.theta.tolist()
        if self.certificate is not None:
            out["separator"] = self.certificate.to_json()
        if self.witness:
            out["witness"] = [{"n": n, "g": g} for n, g in self.witness]
        if self.lower_bounds:
            out["lower_bounds"] = list(self.lower_bounds)
        if self.density_predicate is not None:
            out["density_predicate"] = self.density_predicate
        if self.u_hat is not None:
            out["u_hat"] = self.u_hat.tolist()
        if self.stationarity_residual is not None:
            out["stationarity_residual"] = self.stationarity_residual
        out["diagnostics"] = dict(self.diagnostics)
        return out


def _eta(fam: PhiExponentialFamily, eta) -> np.ndarray:
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    if eta.shape != (fam.m,):
        raise InputError(f"eta must have {fam.m} components, got {eta.shape}", path="eta")
    if not np.all(np.isfinite(eta)):
        raise InputError("eta must be finite", path="eta")
    return eta


def divergence_witness(fam: PhiExponentialFamily, eta, cert: SeparationCertificate,
                       bound: float = 1e3, max_doublings: int = 40) -> list[tuple[int, float]]:
    """``g(theta_n) = theta_n.eta - alpha(theta_n)`` along ``theta_n = n a``.

    ``n`` runs over 1, 2, 4, ... until ``g`` exceeds ``bound``. Since
    ``alpha(n a) <= n a0`` and ``a.eta = a0 + 1`` we have ``g(theta_n) >= n``.
    """
    eta = _eta(fam, eta)
    out = []
    n = 1
    for _ in range(max_doublings):
        theta = n * cert.a
        g = float(theta @ eta) - fam.alpha(theta)
        out.append((n, g))
        if g > bound:
            break
        n *= 2
    return out


def conjugate_upper_bound(fam: PhiExponentialFamily, point_weights) -> float:
    """``ln_phi(C)`` with ``C = max_x lambda(x) / (p(x) mu(x))``.

    Bounds ``theta.eta - alpha(theta)`` for every ``theta`` when
    ``eta = sum_x lambda(x) H(x)``.
    """
    c = float(np.max(np.asarray(point_weights) / fam.weights))
    return float(fam.deformation.ln_phi(c))


def _ascent(fam, eta, dirs, max_iter, tol, polish, theta_cap=1e8):
    """Damped Newton ascent on ``g(U xi) = U xi . eta - alpha(U xi)``.

    Returns ``(xi, g, grad_norm, iterations, history, converged)``; ``history``
    holds the increasing sequence of accepted values of ``g``.
    """
    d = dirs.shape[1]
    xi = np.zeros(d)

    def evaluate(xi):
        theta = dirs @ xi
        a, grad_a, hess_a = fam.alpha_grad_hess(theta)
        g = float(theta @ eta) - a
        grad = dirs.T @ (eta - grad_a)
        hess = dirs.T @ hess_a @ dirs
        return g, grad, hess

    g, grad, hess = evaluate(xi)
    history = [g]
    it = 0
    converged = False
    extra = 0
    while it < max_iter:
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= tol:
            converged = True
            if extra >= polish:
                break
            extra += 1
        it += 1
        reg = 1e-14 * max(1.0, float(np.trace(hess)))
        try:
            step = np.linalg.solve(hess + reg * np.eye(d), grad)
        except np.linalg.LinAlgError:
            step = grad.copy()
        slope = float(grad @ step)
        t = 1.0
        accepted = False
        noise = 4e-16 * max(1.0, abs(g))
        for _ in range(60):
            cand = xi + t * step
            if np.linalg.norm(cand) > theta_cap:
                t *= 0.5
                continue
            g_new, grad_new, hess_new = evaluate(cand)
            if g_new >= g + ARMIJO * t * slope - noise:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        if converged and np.linalg.norm(grad_new) >= gnorm:
            break
        xi, g, grad, hess = cand, g_new, grad_new, hess_new
        # steps accepted within rounding noise must not break monotonicity
        history.append(max(g, history[-1]))
    gnorm = float(np.linalg.norm(grad))
    return xi, g, gnorm, it, history, converged or gnorm <= tol


def alpha_star(fam: PhiExponentialFamily, eta, *, witness_bound: float = 1e3,
               max_iter: int | None = None, newton_tol: float | None = None) -> ConjugateResult:
    eta = _eta(fam, eta)
    poly = fam.polytope
    tol = fam.tolerances
    max_iter = max_iter or tol.max_iter
    newton_tol = newton_tol or tol.newton_tol
    rank_deficient = poly.dim < fam.m

    mem = poly.contains(eta)
    if not mem.member:
        cert = mem.separator
        witness = divergence_witness(fam, eta, cert, bound=witness_bound)
        gs = [g for _, g in witness]
        diag = {
            "witness_increasing": bool(all(b > a for a, b in zip(gs, gs[1:]))),
            "witness_max": gs[-1],
        }
        return ConjugateResult(Status.INFINITE_OUTSIDE, math.inf, eta, certificate=cert,
                               diagnostics=diag, witness=tuple(witness))

    lam = poly.point_weights(mem)
    diag: dict[str, Any] = {"upper_bound": conjugate_upper_bound(fam, lam), "rank_deficient": rank_deficient,
                            "affine_dim": poly.dim}
    if poly.dim == 0:
        # all H(x) equal: g is identically zero
        diag.update(iterations=0, grad_norm=0.0)
        return ConjugateResult(Status.ATTAINED_INTERIOR, 0.0, eta, theta=np.zeros(fam.m),
                               diagnostics=diag)

    interior = poly.relative_interior_contains(eta)
    diag["interior_slack"] = interior.slack
    dirs = poly.directions
    if interior.inside:
        xi, g, gnorm, it, _, ok = _ascent(fam, eta, dirs, max_iter, newton_tol, polish=2)
        diag.update(iterations=it, grad_norm=gnorm)
        if not ok:
            raise NumericalFailure(
                f"Newton did not reach gradient norm {newton_tol:g} in {max_iter} iterations "
                f"(best {gnorm:.3g})", best=dirs @ xi)
        return ConjugateResult(Status.ATTAINED_INTERIOR, g, eta, theta=dirs @ xi, diagnostics=diag)

    xi, g, gnorm, it, history, _ = _ascent(fam, eta, dirs, max_iter, 0.0, polish=0)
    diag.update(iterations=it, grad_norm=gnorm, attainment=False)
    return ConjugateResult(Status.FINITE_BOUNDARY, g, eta, diagnostics=diag,
                           lower_bounds=tuple(history))


@dataclass(frozen=True)
class LegendreReport:
    theta: np.ndarray
    eta: np.ndarray
    theta_hat: np.ndarray
    value: float
    expected_value: float
    theta_error: float
    value_error: float
    theta_tol: float = 1e-7
    value_tol: float = 1e-9

    @property
    def ok(self) -> bool:
        return self.theta_error <= self.theta_tol and self.value_error <= self.value_tol

    def to_json(self) -> dict:
        return {
            "theta": self.theta.tolist(),
            "eta": self.eta.tolist(),
            "theta_hat": self.theta_hat.tolist(),
            "value": self.value,
            "expected_value": self.expected_value,
            "theta_error": self.theta_error,
            "value_error": self.value_error,
            "ok": self.ok,
        }


def legendre_check(fam: PhiExponentialFamily, theta) -> LegendreReport:
    """Round trip ``theta -> grad alpha(theta) -> alpha_star``.

    With dependent statistics ``theta`` is compared through its minimum-norm
    representative, which determines the same density.
    """
    theta = fam._theta(theta)
    eta = fam.grad_alpha(theta)
    res = alpha_star(fam, eta)
    if not res.attained:
        raise NumericalFailure(f"gradient image classified as {res.status.value}")
    dirs = fam.polytope.directions
    reference = dirs @ (dirs.T @ theta)
    expected = float(theta @ eta) - fam.alpha(theta)
    return LegendreReport(
        theta, eta, res.theta, res.value, expected,
        float(np.max(np.abs(res.theta - reference))),
        abs(res.value - expected),
    )


def _u_star(fam: PhiExponentialFamily, u_star) -> np.ndarray:
    u_star = fam.space.variable(u_star, "u_star")
    mean = fam.space.expectation(fam.base_density, u_star)
    if abs(mean) > 1e-10 * max(1.0, float(np.max(np.abs(u_star)))):
        raise InputError(f"u* must be p-centred, E_p[u*] = {mean:.3g}", path="u_star")
    return u_star


def h_v(fam: PhiExponentialFamily, u_star, **kwargs) -> ConjugateResult:
    """Conjugate of ``K`` restricted to ``V``."""
    u_star = _u_star(fam, u_star)
    eta = fam.statistics @ ((u_star + 1.0) * fam.weights)
    res = alpha_star(fam, eta, **kwargs)
    u_hat = res.theta @ fam.basis if res.attained else None
    return replace(res, density_predicate=bool(np.all(u_star + 1.0 >= 0.0)), u_hat=u_hat)


def h_full(fam: PhiExponentialFamily, u_star, **kwargs) -> ConjugateResult:
    """Conjugate of ``K`` over all of ``L_0(p)``.

    When attained, the maximiser satisfies ``escort(u_hat) = (u* + 1) p``;
    ``stationarity_residual`` is the sup-norm defect of that identity.
    """
    full = point_indicator_family(fam.deformation, fam.space, fam.base_density, fam.tolerances)
    res = h_v(full, u_star, **kwargs)
    if res.attained:
        u_star = np.asarray(u_star, dtype=float)
        resid = float(np.max(np.abs(full.escort(res.u_hat) - (u_star + 1.0) * fam.base_density)))
        res = replace(res, stationarity_residual=resid)
    return res
