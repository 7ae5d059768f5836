"""Deformed exponential families on a finite sample space.

Given a deformation, a strictly positive base density ``p`` and statistics
``H_1..H_m``, the family consists of the densities

    p_theta = exp_phi(theta . H - alpha(theta)) * p

or, in the chart centred at ``p``,

    p_u = exp_phi(u - K(u)) * p,   u in V = span{H_j - E_p[H_j]},

with ``K(u) = alpha(theta) - theta . E_p[H]`` for ``u = theta . (H - E_p[H])``.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Any, Sequence

import numpy as np

from .deformations import Deformation, is_self_dual
from .errors import DomainError, InputError, NumericalFailure, UnsupportedIdentityError, ValidationError
from .polytope import MarginalPolytope
from .roots import bisect, newton_bisect
from .state_space import SampleSpace


@dataclass(frozen=True)
class Tolerances:
    alpha_tol: float = 1e-12
    newton_max_iter: int = 100
    # conjugate solver
    newton_tol: float = 1e-9
    max_iter: int = 200
    lp_tol: float = 1e-9

    @classmethod
    def from_json(cls, obj: Any, path: str = "tolerances") -> "Tolerances":
        if obj is None:
            return cls()
        if not isinstance(obj, dict):
            raise ValidationError("tolerances must be an object", path=path)
        known = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, val in obj.items():
            if key not in known:
                raise ValidationError(f"unknown tolerance {key!r}", path=f"{path}.{key}")
            try:
                kwargs[key] = int(val) if key.endswith("iter") else float(val)
            except (TypeError, ValueError):
                raise ValidationError("expected a number", path=f"{path}.{key}") from None
            if kwargs[key] <= 0:
                raise ValidationError("must be positive", path=f"{path}.{key}")
        return cls(**kwargs)


@dataclass(frozen=True)
class UCoordinate:
    """A point of ``V``: coefficients in the centred basis and the random variable."""

    coefficients: np.ndarray
    values: np.ndarray


class PhiExponentialFamily:
    """A deformed exponential family; immutable after construction."""

    def __init__(
        self,
        deformation: Deformation,
        space: SampleSpace,
        base_density,
        statistics,
        tolerances: Tolerances | None = None,
    ):
        self.deformation = deformation
        self.space = space
        self.tolerances = tolerances or Tolerances()
        p = space.density(base_density, path="base_density")
        zero = np.flatnonzero(p <= 0)
        if zero.size:
            raise ValidationError("base density must be strictly positive",
                                  path=f"base_density[{zero[0]}]")
        stats = np.atleast_2d(np.asarray(statistics, dtype=float))
        if stats.ndim != 2 or stats.shape[1] != space.size or stats.shape[0] < 1:
            raise ValidationError(
                f"statistics must be m >= 1 rows of {space.size} values, got shape {stats.shape}",
                path="statistics")
        bad = np.argwhere(~np.isfinite(stats))
        if bad.size:
            raise ValidationError("statistics must be finite", path=f"statistics[{bad[0][0]}][{bad[0][1]}]")
        self.base_density = p
        self.statistics = stats
        self.weights = p * space.mu
        self.mean_statistics = stats @ self.weights
        self.basis = stats - self.mean_statistics[:, None]
        # right end of the normalisation bracket, see _solve
        self._ln_inv_weights = np.asarray(deformation.ln_phi(1.0 / self.weights), dtype=float)
        self.polytope = MarginalPolytope.build(stats, lp_tol=self.tolerances.lp_tol)
        for arr in (self.base_density, self.statistics, self.weights, self.mean_statistics, self.basis):
            arr.flags.writeable = False

    @classmethod
    def from_json(cls, obj: Any) -> "PhiExponentialFamily":
        if not isinstance(obj, dict):
            raise ValidationError("model must be a JSON object", path="")
        for key in ("deformation", "space", "base_density", "statistics"):
            if key not in obj:
                raise ValidationError(f"missing field {key!r}", path=key)
        deformation = Deformation.from_json(obj["deformation"])
        space = SampleSpace.from_json(obj["space"])
        tol = Tolerances.from_json(obj.get("tolerances"))
        stats = obj["statistics"]
        if not isinstance(stats, list) or not stats:
            raise ValidationError("statistics must be a nonempty list of arrays", path="statistics")
        for j, row in enumerate(stats):
            if not isinstance(row, list) or len(row) != space.size:
                raise ValidationError(f"expected {space.size} values", path=f"statistics[{j}]")
        base = obj["base_density"]
        if not isinstance(base, list):
            raise ValidationError("base_density must be an array", path="base_density")
        return cls(deformation, space, base, stats, tol)

    def to_json(self) -> dict:
        return {
            "deformation": self.deformation.to_json(),
            "space": self.space.to_json(),
            "base_density": self.base_density.tolist(),
            "statistics": self.statistics.tolist(),
        }

    def with_statistics(self, statistics) -> "PhiExponentialFamily":
        return PhiExponentialFamily(self.deformation, self.space, self.base_density, statistics, self.tolerances)

    def with_tolerances(self, **kwargs) -> "PhiExponentialFamily":
        return PhiExponentialFamily(self.deformation, self.space, self.base_density, self.statistics,
                                    replace(self.tolerances, **kwargs))

    @property
    def m(self) -> int:
        return self.statistics.shape[0]

    @property
    def n(self) -> int:
        return self.statistics.shape[1]

    # -- normalisation ------------------------------------------------------

    def _theta(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.m,):
            raise InputError(f"theta must have {self.m} components, got {theta.shape}", path="theta")
        return theta

    def _u(self, u) -> np.ndarray:
        if isinstance(u, UCoordinate):
            u = u.values
        return self.space.variable(u, "u")

    def _solve(self, t: np.ndarray) -> tuple[float, np.ndarray]:
        """Find ``c`` with ``E_p[exp_phi(t - c)] = 1``; return ``(c, t - c)``.

        Writing ``c = max(t) - s`` keeps every argument of ``exp_phi`` in
        ``[min(t) - max(t), ln_phi(1/w_x)]``, so nothing overflows. ``F(s)`` is
        increasing, ``F(0) <= 1`` because all arguments are ``<= 0``, and
        ``F(s_hi) >= 1`` at the end of the bracket below.
        """
        d = self.deformation
        tol = self.tolerances
        t_max = float(np.max(t))
        shift = t - t_max
        w = self.weights
        s_hi = min(-float(np.min(shift)), float(np.min(self._ln_inv_weights - shift)))
        if s_hi <= 0.0:
            return t_max, shift

        def F(s):
            e, e1 = d.exp_phi_with_d1(shift + s)
            return float(np.dot(w, e)) - 1.0, float(np.dot(w, e1))

        res = newton_bisect(F, 0.0, s_hi, ftol=tol.alpha_tol, max_iter=tol.newton_max_iter)
        s = res.x
        if not res.converged:
            s = bisect(lambda x: F(x)[0], 0.0, s_hi, xtol=1e-14)
            resid = F(s)[0]
            if abs(resid) > tol.alpha_tol:
                # nearest floating neighbours may do better than the midpoint
                cands = [s, np.nextafter(s, 0.0), np.nextafter(s, s_hi)]
                s = min(cands, key=lambda x: abs(F(x)[0]))
                resid = F(s)[0]
                if abs(resid) > tol.alpha_tol:
                    raise NumericalFailure(
                        f"normalisation residual {resid:.3g} exceeds {tol.alpha_tol:g}", best=t_max - s)
        return t_max - s, shift + s

    def alpha(self, theta) -> float:
        theta = self._theta(theta)
        return self._solve(theta @ self.statistics)[0]

    def normalization_residual(self, theta) -> float:
        """``E_p[exp_phi(theta.H - alpha(theta))] - 1``."""
        _, r = self._solve(self._theta(theta) @ self.statistics)
        return float(np.dot(self.weights, self.deformation.exp_phi(r))) - 1.0

    def density(self, theta) -> np.ndarray:
        _, r = self._solve(self._theta(theta) @ self.statistics)
        return self.deformation.exp_phi(r) * self.base_density

    # -- chart ----------------------------------------------------------------

    def u_of(self, theta) -> UCoordinate:
        theta = self._theta(theta)
        return UCoordinate(theta.copy(), theta @ self.basis)

    def theta_to_u(self, theta) -> tuple[UCoordinate, float]:
        theta = self._theta(theta)
        return self.u_of(theta), self.alpha(theta) - float(theta @ self.mean_statistics)

    def u_to_theta(self, u) -> np.ndarray:
        if isinstance(u, UCoordinate):
            return self._theta(u.coefficients).copy()
        u = self._u(u)
        coef, *_ = np.linalg.lstsq(self.basis.T, u, rcond=None)
        resid = float(np.max(np.abs(coef @ self.basis - u)))
        if resid > 1e-9 * max(1.0, float(np.max(np.abs(u)))):
            raise InputError(f"u is not in V (distance {resid:.3g})", path="u")
        return coef

    def K(self, u) -> float:
        return self._solve(self._u(u))[0]

    def density_u(self, u) -> np.ndarray:
        _, r = self._solve(self._u(u))
        return self.deformation.exp_phi(r) * self.base_density

    # -- derivatives ----------------------------------------------------------

    def _escort_from(self, r) -> np.ndarray:
        # phi(p_u / p) = exp_phi'(u - K(u))
        g = self.deformation.exp_phi_d1(r)
        return g * self.base_density / float(np.dot(self.weights, g))

    def escort(self, u) -> np.ndarray:
        """Escort density ``phi(p_u/p) p / E_p[phi(p_u/p)]`` with respect to ``mu``."""
        return self._escort_from(self._solve(self._u(u))[1])

    def escort_theta(self, theta) -> np.ndarray:
        return self._escort_from(self._solve(self._theta(theta) @ self.statistics)[1])

    def dK(self, u, v) -> float:
        v = self.space.variable(v, "v")
        return self.space.expectation(self.escort(u), v)

    def _second(self, r, dirs: np.ndarray) -> np.ndarray:
        """Matrix of ``D^2K`` over the rows of ``dirs``, given ``r = u - K(u)``."""
        _, e1, e2 = self.deformation.exp_phi_derivs(r)
        esc = e1 * self.base_density / float(np.dot(self.weights, e1))
        centred = dirs - (dirs @ (esc * self.space.mu))[:, None]
        num = (centred * (e2 * self.weights)) @ centred.T
        mat = num / float(np.dot(self.weights, e1))
        return 0.5 * (mat + mat.T)

    def d2K(self, u, v, w) -> float:
        """``E_p[exp_phi''(u-K)(v - DKv)(w - DKw)] / E_p[exp_phi'(u-K)]``."""
        _, r = self._solve(self._u(u))
        v = self.space.variable(v, "v")
        w = self.space.variable(w, "w")
        _, e1, e2 = self.deformation.exp_phi_derivs(r)
        esc = e1 * self.base_density / float(np.dot(self.weights, e1))
        a = float(np.dot(esc * self.space.mu, v))
        b = float(np.dot(esc * self.space.mu, w))
        num = float(np.sum(e2 * self.weights * ((v - a) * (w - b))))
        return num / float(np.dot(self.weights, e1))

    def grad_alpha(self, theta) -> np.ndarray:
        """``E_escort[H]``, the gradient of ``alpha``."""
        esc = self.escort_theta(theta)
        return self.statistics @ (esc * self.space.mu)

    def hessian_alpha(self, theta) -> np.ndarray:
        _, r = self._solve(self._theta(theta) @ self.statistics)
        return self._second(r, self.basis)

    def alpha_grad_hess(self, theta) -> tuple[float, np.ndarray, np.ndarray]:
        """``alpha``, its gradient and Hessian from a single normalisation."""
        c, r = self._solve(self._theta(theta) @ self.statistics)
        esc = self._escort_from(r)
        return c, self.statistics @ (esc * self.space.mu), self._second(r, self.basis)

    # -- divergence -----------------------------------------------------------

    def _positive_density(self, q) -> np.ndarray:
        q = self.space.density(q, path="q", tol=1e-9)
        zero = np.flatnonzero(q <= 0)
        if zero.size:
            raise DomainError("q must be strictly positive", path=f"q[{zero[0]}]")
        return q

    def divergence(self, q) -> float:
        """``E_p[ln_phi(p/q)]``; needs a self-dual deformation."""
        d = self.deformation
        if not (d.self_dual and is_self_dual(d, np.linspace(-5.0, 5.0, 21), tol=1e-9)):
            raise UnsupportedIdentityError(
                "the divergence identity requires a self-dual deformation", path="deformation")
        q = self._positive_density(q)
        return float(np.dot(self.weights, d.ln_phi(self.base_density / q)))

    def recover_u(self, q) -> np.ndarray:
        """``ln_phi(q/p) - E_p[ln_phi(q/p)]``."""
        q = self._positive_density(q)
        lr = self.deformation.ln_phi(q / self.base_density)
        return lr - float(np.dot(self.weights, lr))


def point_indicator_family(deformation: Deformation, space: SampleSpace, p,
                           tolerances: Tolerances | None = None) -> PhiExponentialFamily:
    """Family whose statistics are the point indicators, so ``V`` is all of ``L_0(p)``."""
    return PhiExponentialFamily(deformation, space, p, np.eye(space.size), tolerances)


def family_from_arrays(deformation: Deformation, mu: Sequence[float], p: Sequence[float],
                       statistics, tolerances: Tolerances | None = None) -> PhiExponentialFamily:
    return PhiExponentialFamily(deformation, SampleSpace.from_weights(mu), p, statistics, tolerances)
