"""Deformed logarithm and exponential functions.

A :class:`Deformation` bundles a positive increasing function ``phi`` on the
positive reals together with

* ``ln_phi(v) = int_1^v dy / phi(y)``,
* ``exp_phi``, the inverse of ``ln_phi`` (solution of ``y' = phi(y)``, ``y(0) = 1``),
* the rate function ``psi(u) = phi(exp_phi(u)) / exp_phi(u)``,

and the first two derivatives of ``exp_phi``:
``exp_phi' = psi * exp_phi`` and ``exp_phi'' = (psi' + psi**2) * exp_phi``.

Throughout, ``phi(v) = v * psi(ln_phi(v))``.

Four constructions are available:

``classical``
    ``phi(v) = v``; ordinary ``log``/``exp``.
``kaniadakis(kappa)``
    ``psi(u) = (1 + kappa**2 u**2) ** -0.5``, closed forms everywhere.
``from_psi(psi)``
    a user rate function; ``exp_phi(u) = exp(int_0^u psi)`` by quadrature and
    ``ln_phi`` by inverting it.
``self_dual_sigma(sigma, q)``
    ``phi(y) = y * sigma(y**q, y**-q)`` for a symmetric ``sigma``; ``ln_phi`` by
    quadrature of ``1/phi`` and ``exp_phi`` by inverting it.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, NumericalFailure, QuadratureError, ValidationError
from .roots import newton_bisect

KAPPA_ZERO = 1e-12


class Kind(str, enum.Enum):
    CLASSICAL = "classical"
    KANIADAKIS = "kaniadakis"
    FROM_PSI = "from_psi"
    SELF_DUAL_SIGMA = "self_dual_sigma"


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-12
    max_subdivisions: int = 200


@dataclass(frozen=True)
class InversionConfig:
    tol: float = 1e-12
    max_iter: int = 200


def _kaniadakis_sigma(s, t):
    return 2.0 / (s + t)


def _quadratic_sigma(s, t):
    return np.sqrt(2.0 / (s * s + t * t))


SIGMA_LIBRARY: dict[str, Callable] = {
    "kaniadakis": _kaniadakis_sigma,
    "quadratic": _quadratic_sigma,
}


def _elementwise(fn: Callable[[float], float], x):
    """Apply a scalar routine to a scalar or array argument."""
    if np.ndim(x) == 0:
        return fn(float(x))
    arr = np.asarray(x, dtype=float)
    return np.array([fn(float(xi)) for xi in arr.ravel()]).reshape(arr.shape)


def _call_vectorized(fn: Callable, x):
    """Call a user function on an array, falling back to a Python loop."""
    arr = np.asarray(x, dtype=float)
    try:
        out = np.asarray(fn(arr), dtype=float)
        if out.shape == arr.shape:
            return out
    except Exception:
        pass
    return np.array([_scalar_call(fn, float(xi)) for xi in arr.ravel()]).reshape(arr.shape)


def _scalar_call(fn: Callable, x: float) -> float:
    try:
        return float(fn(x))
    except OverflowError:
        return math.inf


def _check_positive(v, what="v"):
    arr = np.asarray(v, dtype=float)
    bad = ~(arr > 0)
    if np.any(bad):
        idx = int(np.flatnonzero(bad.ravel())[0])
        raise DomainError(f"{what} must be strictly positive, got {arr.ravel()[idx]!r}",
                          path=f"{what}[{idx}]" if arr.ndim else what)
    return arr


@dataclass(frozen=True, eq=False)
class Deformation:
    """An immutable deformed exponential. Use the class-method constructors."""

    kind: Kind
    kappa: float = 0.0
    q: float = 0.0
    psi_fn: Callable | None = field(default=None, repr=False)
    dpsi_fn: Callable | None = field(default=None, repr=False)
    psi_integral: Callable | None = field(default=None, repr=False)
    sigma: Callable | None = field(default=None, repr=False)
    quadrature: QuadratureConfig = QuadratureConfig()
    inversion: InversionConfig = InversionConfig()
    self_dual: bool = True
    description: dict | None = field(default=None, repr=False)

    # -- constructors -----------------------------------------------------

    @classmethod
    def classical(cls) -> "Deformation":
        return cls(Kind.CLASSICAL, description={"kind": "classical"})

    @classmethod
    def kaniadakis(cls, kappa: float) -> "Deformation":
        if not 0.0 <= kappa < 1.0:
            raise ValidationError(f"kappa must lie in [0, 1), got {kappa!r}", path="kappa")
        desc = {"kind": "kaniadakis", "kappa": float(kappa)}
        if kappa < KAPPA_ZERO:
            return cls(Kind.CLASSICAL, description=desc)
        return cls(Kind.KANIADAKIS, kappa=float(kappa), description=desc)

    @classmethod
    def from_psi(
        cls,
        psi: Callable,
        dpsi: Callable | None = None,
        *,
        psi_integral: Callable | None = None,
        validate: bool = True,
        grid: np.ndarray | None = None,
        quadrature: QuadratureConfig = QuadratureConfig(),
        inversion: InversionConfig = InversionConfig(),
        description: dict | None = None,
    ) -> "Deformation":
        """Build a deformation from its rate function ``psi``.

        ``psi_integral(u)``, when given, must return ``int_0^u psi``; otherwise
        the integral is computed by adaptive quadrature. With ``validate``,
        positivity of ``psi`` and ``psi' + psi**2 >= 0`` are checked on
        ``grid`` (default: 10**4 points on [-50, 50]). These are sampled
        checks only; divergence of the tails of ``psi`` is not verified.
        """
        if grid is None:
            grid = np.linspace(-50.0, 50.0, 10_000)
        grid = np.asarray(grid, dtype=float)
        sym_grid = np.linspace(0.0, 10.0, 201)
        with np.errstate(all="ignore"):
            sym = _call_vectorized(psi, sym_grid) - _call_vectorized(psi, -sym_grid)
        self_dual = bool(np.all(np.abs(sym) <= 1e-12 * (1 + np.abs(_call_vectorized(psi, sym_grid)))))
        d = cls(
            Kind.FROM_PSI,
            psi_fn=psi,
            dpsi_fn=dpsi,
            psi_integral=psi_integral,
            quadrature=quadrature,
            inversion=inversion,
            self_dual=self_dual,
            description=description or {"kind": "from_psi"},
        )
        if validate:
            d.validate(grid)
        return d

    @classmethod
    def from_psi_table(cls, u, psi, **kwargs) -> "Deformation":
        """Rate function given by samples; monotone-cubic interpolation.

        Outside the table ``psi`` is extended by its boundary values, so the
        tails are constant rather than the true ones.
        """
        u = np.asarray(u, dtype=float)
        psi_vals = np.asarray(psi, dtype=float)
        if u.ndim != 1 or u.shape != psi_vals.shape or u.size < 2:
            raise ValidationError("psi_table needs equal-length 'u' and 'psi' arrays (>= 2 points)",
                                  path="psi_table")
        if np.any(np.diff(u) <= 0):
            raise ValidationError("psi_table 'u' must be strictly increasing", path="psi_table.u")
        if np.any(psi_vals <= 0):
            raise ValidationError("psi_table values must be positive", path="psi_table.psi")
        interp = PchipInterpolator(u, psi_vals, extrapolate=False)
        deriv = interp.derivative()
        anti = interp.antiderivative()
        lo, hi = u[0], u[-1]
        a_lo, a_hi = float(psi_vals[0]), float(psi_vals[-1])
        anti0 = float(_table_anti(anti, lo, hi, a_lo, a_hi, 0.0))

        def table_psi(x):
            return interp(np.clip(x, lo, hi))

        def table_dpsi(x):
            x = np.asarray(x, dtype=float)
            return np.where((x > lo) & (x < hi), deriv(np.clip(x, lo, hi)), 0.0)

        def table_integral(x):
            return _table_anti(anti, lo, hi, a_lo, a_hi, x) - anti0

        desc = {
            "kind": "from_psi",
            "psi_table": {"u": u.tolist(), "psi": psi_vals.tolist()},
            "interpolation": "monotone-cubic",
        }
        return cls.from_psi(table_psi, table_dpsi, psi_integral=table_integral,
                            description=desc, **kwargs)

    @classmethod
    def self_dual_sigma(cls, sigma: Callable | str, q: float) -> "Deformation":
        """``phi(y) = y * sigma(y**q, y**-q)`` with ``sigma`` symmetric."""
        name = None
        if isinstance(sigma, str):
            name = sigma
            try:
                sigma = SIGMA_LIBRARY[sigma]
            except KeyError:
                raise ValidationError(f"unknown sigma {name!r}; known: {sorted(SIGMA_LIBRARY)}",
                                      path="sigma") from None
        if not 0.0 < q < 1.0:
            raise ValidationError(f"q must lie in (0, 1), got {q!r}", path="q")
        desc = {"kind": "self_dual_sigma", "sigma": name, "q": float(q)}
        return cls(Kind.SELF_DUAL_SIGMA, q=float(q), sigma=sigma, description=desc)

    # -- core functions ---------------------------------------------------

    def phi(self, v):
        v = _check_positive(v)
        if self.kind is Kind.CLASSICAL:
            return v * 1.0
        if self.kind is Kind.KANIADAKIS:
            return v / np.cosh(self.kappa * np.log(v))
        if self.kind is Kind.SELF_DUAL_SIGMA:
            return v * self.sigma(v**self.q, v ** (-self.q))
        return v * self.psi(self.ln_phi(v))

    def psi(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind is Kind.CLASSICAL:
            return np.ones_like(u)
        if self.kind is Kind.KANIADAKIS:
            return 1.0 / np.sqrt(1.0 + (self.kappa * u) ** 2)
        if self.kind is Kind.FROM_PSI:
            return _call_vectorized(self.psi_fn, u)
        e = self.exp_phi(u)
        return self.sigma(e**self.q, e ** (-self.q))

    def dpsi(self, u):
        """Derivative of the rate function; central difference when not known."""
        u = np.asarray(u, dtype=float)
        if self.kind is Kind.CLASSICAL:
            return np.zeros_like(u)
        if self.kind is Kind.KANIADAKIS:
            k2 = self.kappa**2
            return -k2 * u * (1.0 + k2 * u * u) ** -1.5
        if self.kind is Kind.FROM_PSI and self.dpsi_fn is not None:
            return _call_vectorized(self.dpsi_fn, u)
        h = np.maximum(1e-6, 1e-8 * np.abs(u))
        return (self.psi(u + h) - self.psi(u - h)) / (2.0 * h)

    def ln_phi(self, v):
        v = _check_positive(v)
        if self.kind is Kind.CLASSICAL:
            return np.log(v)
        if self.kind is Kind.KANIADAKIS:
            return np.sinh(self.kappa * np.log(v)) / self.kappa
        if self.kind is Kind.SELF_DUAL_SIGMA:
            return _elementwise(self._ln_by_quadrature, v)
        return _elementwise(self._ln_by_inversion, v)

    def exp_phi(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind is Kind.CLASSICAL:
            return np.exp(u)
        if self.kind is Kind.KANIADAKIS:
            return np.exp(np.arcsinh(self.kappa * u) / self.kappa)
        if self.kind is Kind.SELF_DUAL_SIGMA:
            return _elementwise(self._exp_by_inversion, u)
        return np.exp(_elementwise(self._psi_integral, u))

    def exp_phi_d1(self, u):
        return self.exp_phi_with_d1(u)[1]

    def exp_phi_with_d1(self, u):
        """``(exp_phi, exp_phi')`` sharing one evaluation of ``exp_phi``."""
        u = np.asarray(u, dtype=float)
        e = self.exp_phi(u)
        if self.kind is Kind.SELF_DUAL_SIGMA:
            return e, self.sigma(e**self.q, e ** (-self.q)) * e
        return e, self.psi(u) * e

    def exp_phi_d2(self, u):
        u = np.asarray(u, dtype=float)
        psi = self.psi(u)
        return (self.dpsi(u) + psi * psi) * self.exp_phi(u)

    def exp_phi_derivs(self, u):
        """``(exp_phi, exp_phi', exp_phi'')`` sharing one evaluation of ``exp_phi``."""
        u = np.asarray(u, dtype=float)
        e = self.exp_phi(u)
        if self.kind is Kind.SELF_DUAL_SIGMA:
            psi = self.sigma(e**self.q, e ** (-self.q))
        else:
            psi = self.psi(u)
        return e, psi * e, (self.dpsi(u) + psi * psi) * e

    # -- numerical routes -------------------------------------------------

    def _quad(self, fn, a: float, b: float, what: str) -> float:
        if a == b:
            return 0.0
        cfg = self.quadrature
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(fn, a, b, epsabs=cfg.abs_tol, epsrel=1e-13,
                                      limit=cfg.max_subdivisions)
        if not (math.isfinite(val) and err <= max(cfg.abs_tol, 1e-12 * abs(val))):
            raise QuadratureError(
                f"{what}: quadrature on [{a}, {b}] reached error estimate {err:.3g}"
                f" > tolerance {cfg.abs_tol:g} within {cfg.max_subdivisions} subdivisions")
        return val

    def _psi_integral(self, u: float) -> float:
        if self.psi_integral is not None:
            return float(self.psi_integral(u))
        return self._quad(lambda s: float(self.psi_fn(s)), 0.0, u, "int_0^u psi")

    def _log_integrand(self, s: float) -> float:
        # dy / phi(y) with y = e^s
        e = math.exp(s)
        return 1.0 / float(self.sigma(e**self.q, e ** (-self.q)))

    def _ln_by_quadrature(self, v: float) -> float:
        return self._quad(self._log_integrand, 0.0, math.log(v), "ln_phi")

    def _invert(self, F: Callable[[float], float], dF: Callable[[float], float], target: float) -> float:
        """Solve ``F(s) = target`` for increasing ``F`` with ``F(0) = 0``."""
        cfg = self.inversion
        if target == 0.0:
            return 0.0
        step = 1.0
        lo, hi = (0.0, step) if target > 0 else (-step, 0.0)
        for _ in range(cfg.max_iter):
            if target > 0 and F(hi) < target:
                lo, hi = hi, 2.0 * hi
            elif target < 0 and F(lo) > target:
                lo, hi = 2.0 * lo, lo
            else:
                break
        else:
            raise NumericalFailure(f"could not bracket inverse for target {target!r}")
        res = newton_bisect(lambda s: (F(s) - target, dF(s)), lo, hi,
                            ftol=cfg.tol * max(1.0, abs(target)), max_iter=cfg.max_iter)
        if not res.converged and abs(res.fx) > 10 * cfg.tol * max(1.0, abs(target)):
            raise NumericalFailure(
                f"inversion did not converge in {cfg.max_iter} iterations (residual {res.fx:.3g})",
                best=res.x)
        return res.x

    def _exp_by_inversion(self, u: float) -> float:
        s = self._invert(self._ln_by_log, self._log_integrand, u)
        return math.exp(s)

    def _ln_by_log(self, s: float) -> float:
        return self._quad(self._log_integrand, 0.0, s, "ln_phi")

    def _ln_by_inversion(self, v: float) -> float:
        return self._invert(self._psi_integral, lambda s: float(self.psi(s)), math.log(v))

    # -- checks -----------------------------------------------------------

    def validate(self, grid) -> None:
        """Sampled check of ``psi > 0`` and ``psi' + psi**2 >= 0``."""
        grid = np.asarray(grid, dtype=float)
        with np.errstate(all="ignore"):
            psi = self.psi(grid)
            curv = self.dpsi(grid) + psi * psi
        finite = np.isfinite(psi)
        bad = np.flatnonzero(finite & ~(psi > 0))
        if bad.size:
            raise ValidationError(f"psi is not positive at u={grid[bad[0]]!r}", path="psi")
        ok = np.isfinite(curv)
        with np.errstate(all="ignore"):
            bad = np.flatnonzero(ok & (curv < -1e-9 * np.maximum(1.0, psi * psi)))
        if bad.size:
            raise ValidationError(
                f"psi' + psi^2 < 0 at u={grid[bad[0]]!r}: exp_phi would not be convex", path="psi")

    def to_json(self) -> dict:
        if self.description is None or (self.kind is Kind.SELF_DUAL_SIGMA
                                        and self.description.get("sigma") is None):
            raise ValidationError("deformation built from a Python callable has no JSON form")
        if self.kind is Kind.FROM_PSI and "psi_table" not in self.description:
            raise ValidationError("deformation built from a Python callable has no JSON form")
        return dict(self.description)

    @classmethod
    def from_json(cls, obj: Any, path: str = "deformation") -> "Deformation":
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ValidationError("deformation must be an object with a 'kind'", path=path)
        kind = obj["kind"]
        try:
            if kind == "classical":
                return cls.classical()
            if kind == "kaniadakis":
                return cls.kaniadakis(float(obj["kappa"]))
            if kind == "self_dual_sigma":
                return cls.self_dual_sigma(obj["sigma"], float(obj["q"]))
            if kind == "from_psi":
                interp = obj.get("interpolation", "monotone-cubic")
                if interp != "monotone-cubic":
                    raise ValidationError(f"unsupported interpolation {interp!r}", path="interpolation")
                table = obj["psi_table"]
                return cls.from_psi_table(table["u"], table["psi"])
        except KeyError as exc:
            raise ValidationError(f"missing field {exc.args[0]!r}", path=f"{path}.{exc.args[0]}") from None
        except ValidationError as exc:
            exc.path = f"{path}.{exc.path}" if exc.path else path
            raise
        except (TypeError, ValueError) as exc:
            raise ValidationError(str(exc), path=path) from None
        raise ValidationError(f"unknown deformation kind {kind!r}", path=f"{path}.kind")


def _table_anti(anti, lo, hi, a_lo, a_hi, x):
    x = np.asarray(x, dtype=float)
    inside = anti(np.clip(x, lo, hi))
    return inside + a_lo * np.minimum(x - lo, 0.0) + a_hi * np.maximum(x - hi, 0.0)


class SelfDuality(NamedTuple):
    holds: bool
    max_deviation: float

    def __bool__(self) -> bool:
        return self.holds


def self_duality_residual(d: Deformation, grid) -> float:
    """``max |exp_phi(u) exp_phi(-u) - 1|`` over ``grid``."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValidationError("grid must be nonempty", path="grid")
    with np.errstate(over="ignore", invalid="ignore"):
        dev = np.abs(d.exp_phi(grid) * d.exp_phi(-grid) - 1.0)
    dev = np.where(np.isnan(dev), np.inf, dev)
    return float(np.max(dev))


def is_self_dual(d: Deformation, grid, tol: float = 1e-10) -> SelfDuality:
    dev = self_duality_residual(d, grid)
    return SelfDuality(dev <= tol, dev)
