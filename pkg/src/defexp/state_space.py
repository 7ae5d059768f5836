"""Finite sample spaces with a reference measure.

Random variables and densities are plain float arrays aligned with
``SampleSpace.labels``. Densities are taken with respect to ``mu``, so a
vector ``q`` is a density when ``q >= 0`` and ``sum(q * mu) == 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .errors import ValidationError

DENSITY_TOL = 1e-12
RANK_TOL = 1e-10


def numerical_rank(mat: np.ndarray, rtol: float = RANK_TOL) -> int:
    """Rank with singular values below ``rtol * s_max`` treated as zero."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    if mat.size == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


@dataclass(frozen=True, eq=False)
class SampleSpace:
    labels: tuple
    mu: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        labels = tuple(self.labels)
        if mu.ndim != 1 or len(labels) != mu.size:
            raise ValidationError("labels and mu must have the same length", path="mu")
        if mu.size < 2:
            raise ValidationError("a sample space needs at least two points", path="labels")
        if len(set(labels)) != len(labels):
            raise ValidationError("labels must be distinct", path="labels")
        bad = np.flatnonzero(~(mu > 0) | ~np.isfinite(mu))
        if bad.size:
            raise ValidationError(f"mu must be strictly positive, got {mu[bad[0]]!r}",
                                  path=f"mu[{bad[0]}]")
        mu.flags.writeable = False
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_weights(cls, mu: Sequence[float], labels: Sequence | None = None) -> "SampleSpace":
        mu = np.asarray(mu, dtype=float)
        if labels is None:
            labels = tuple(range(mu.size))
        return cls(tuple(labels), mu)

    @classmethod
    def from_json(cls, obj: Any, path: str = "space") -> "SampleSpace":
        if not isinstance(obj, dict) or "mu" not in obj:
            raise ValidationError("space must be an object with 'mu'", path=path)
        mu = _float_array(obj["mu"], f"{path}.mu")
        labels = obj.get("labels")
        try:
            return cls.from_weights(mu, labels)
        except ValidationError as exc:
            exc.path = f"{path}.{exc.path}" if exc.path else path
            raise

    def to_json(self) -> dict:
        return {"labels": list(self.labels), "mu": self.mu.tolist()}

    @property
    def size(self) -> int:
        return self.mu.size

    def __len__(self) -> int:
        return self.mu.size

    # -- random variables and densities ------------------------------------

    def variable(self, values, path: str = "u") -> np.ndarray:
        arr = np.asarray(values, dtype=float)
        if arr.shape != (self.size,):
            raise ValidationError(f"expected {self.size} values, got shape {arr.shape}", path=path)
        bad = np.flatnonzero(~np.isfinite(arr))
        if bad.size:
            raise ValidationError("values must be finite", path=f"{path}[{bad[0]}]")
        return arr

    def is_density(self, q, tol: float = DENSITY_TOL) -> bool:
        q = np.asarray(q, dtype=float)
        return bool(q.shape == (self.size,) and np.all(q >= 0)
                    and abs(float(np.dot(q, self.mu)) - 1.0) <= tol)

    def density(self, values, path: str = "q", tol: float = DENSITY_TOL) -> np.ndarray:
        """Validate and return a density vector."""
        q = self.variable(values, path)
        neg = np.flatnonzero(q < 0)
        if neg.size:
            raise ValidationError(f"density is negative ({q[neg[0]]!r})", path=f"{path}[{neg[0]}]")
        total = float(np.dot(q, self.mu))
        if abs(total - 1.0) > tol:
            raise ValidationError(f"density integrates to {total!r} under mu, not 1", path=path)
        return q

    def uniform(self) -> np.ndarray:
        """The density proportional to 1, i.e. ``1 / mu(X)``."""
        return np.full(self.size, 1.0 / self.mu.sum())

    def indicator(self, i: int) -> np.ndarray:
        e = np.zeros(self.size)
        e[i] = 1.0
        return e

    # -- p-weighted linear algebra -----------------------------------------

    def expectation(self, p, u) -> float:
        """``E_p[u] = sum_x u(x) p(x) mu(x)``."""
        p = np.asarray(p, dtype=float)
        u = np.asarray(u, dtype=float)
        if p.shape != (self.size,) or u.shape[-1:] != (self.size,):
            raise ValidationError(f"shape mismatch: space has {self.size} points, "
                                  f"got p{p.shape} and u{u.shape}")
        return u @ (p * self.mu)

    def center(self, p, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        mean = self.expectation(p, u)
        return u - np.asarray(mean)[..., None]

    def covariance(self, p, u, v) -> float:
        cu = self.center(p, u)
        cv = self.center(p, v)
        return float(np.sum(cu * cv * p * self.mu))

    def inner(self, p, u, v) -> float:
        """The duality pairing ``E_p[u v]``."""
        return float(np.sum(np.asarray(u) * np.asarray(v) * p * self.mu))

    def gram(self, p, basis) -> np.ndarray:
        b = np.atleast_2d(np.asarray(basis, dtype=float))
        g = (b * (p * self.mu)) @ b.T
        return 0.5 * (g + g.T)

    def project_onto_span(self, p, basis, target) -> np.ndarray:
        """``E_p``-orthogonal projection of ``target`` onto ``span(basis)``.

        Dependent bases are handled by a pseudo-inverse of the Gram matrix with
        relative cutoff ``RANK_TOL``.
        """
        b = np.atleast_2d(np.asarray(basis, dtype=float))
        target = self.variable(target, "target")
        if b.shape[0] == 0:
            return np.zeros(self.size)
        rhs = b @ (target * p * self.mu)
        coef = np.linalg.pinv(self.gram(p, b), rcond=RANK_TOL, hermitian=True) @ rhs
        return coef @ b


def _float_array(obj, path: str) -> np.ndarray:
    if not isinstance(obj, (list, tuple, np.ndarray)):
        raise ValidationError("expected an array of numbers", path=path)
    for i, x in enumerate(obj):
        if isinstance(x, bool) or not isinstance(x, (int, float, np.number)):
            raise ValidationError(f"expected a number, got {x!r}", path=f"{path}[{i}]")
    return np.asarray(obj, dtype=float)
