"""Marginal polytope ``M = conv{H(x) : x in X}`` and LP-backed queries."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InputError, NumericalFailure
from .lp import simplex
from .state_space import RANK_TOL

DUPLICATE_TOL = 1e-12


@dataclass(frozen=True)
class SeparationCertificate:
    """Affine functional with ``a.H(x) <= a0`` for all ``x`` and ``a.eta = a0 + 1``."""

    a: np.ndarray
    a0: float

    def verify(self, points, eta, tol: float = 1e-9) -> bool:
        pts = np.atleast_2d(points)
        return bool(np.all(pts @ self.a <= self.a0 + tol)
                    and float(self.a @ np.asarray(eta, dtype=float)) >= self.a0 + 1.0 - tol)

    def to_json(self) -> dict:
        return {"a": self.a.tolist(), "a0": float(self.a0)}


@dataclass(frozen=True)
class Membership:
    """Exactly one of ``weights`` (over distinct vertices) and ``separator`` is set."""

    member: bool
    weights: np.ndarray | None = None
    separator: SeparationCertificate | None = None

    def __bool__(self) -> bool:
        return self.member

    def to_json(self) -> dict:
        if self.member:
            return {"member": True, "lambda": self.weights.tolist()}
        return {"member": False, "separator": self.separator.to_json()}


class Interior(NamedTuple):
    inside: bool
    slack: float  # optimal minimum weight; -inf when not a member

    def __bool__(self) -> bool:
        return self.inside


class MarginalPolytope:
    """Convex hull of the columns of ``H`` (one point per sample point).

    Queries run in coordinates of the affine hull, so rank-deficient
    statistics are handled and "interior" means relative interior.
    """

    def __init__(self, points: np.ndarray, lp_tol: float = 1e-9):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        self.points = points
        self.lp_tol = lp_tol
        verts: list[np.ndarray] = []
        index: list[int] = []
        owner = np.empty(len(points), dtype=int)
        for x, pt in enumerate(points):
            for k, v in enumerate(verts):
                if np.all(np.abs(pt - v) <= DUPLICATE_TOL):
                    owner[x] = k
                    break
            else:
                owner[x] = len(verts)
                verts.append(pt)
                index.append(x)
        self.vertices = np.array(verts)
        self.vertex_index = np.array(index)  # first sample point of each vertex
        self.owner = owner  # vertex of each sample point
        self.base = self.vertices[0].copy()
        diffs = self.vertices - self.base
        if diffs.shape[0] > 1 and np.any(diffs):
            _, s, vt = np.linalg.svd(diffs, full_matrices=False)
            rank = int(np.sum(s > RANK_TOL * s[0]))
            self.directions = vt[:rank].T
        else:
            self.directions = np.zeros((points.shape[1], 0))
        self.scale = max(1.0, float(np.max(np.abs(self.vertices))))
        self.reduced_vertices = diffs @ self.directions
        for arr in (self.points, self.vertices, self.base, self.directions, self.reduced_vertices):
            arr.flags.writeable = False

    @classmethod
    def build(cls, stats, lp_tol: float = 1e-9) -> "MarginalPolytope":
        """From statistics ``H`` given as ``m`` rows over the sample points."""
        stats = np.atleast_2d(np.asarray(stats, dtype=float))
        if stats.shape[0] < 1:
            raise InputError("need at least one statistic", path="statistics")
        return cls(stats.T, lp_tol)

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    def _eta(self, eta) -> np.ndarray:
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        if eta.shape != (self.ambient_dim,):
            raise InputError(f"eta must have {self.ambient_dim} components, got {eta.shape}", path="eta")
        return eta

    # -- coordinates ----------------------------------------------------------

    def off_hull(self, eta) -> np.ndarray:
        """Component of ``eta - base`` orthogonal to the affine hull."""
        rel = self._eta(eta) - self.base
        return rel - self.directions @ (self.directions.T @ rel)

    def reduce_coordinates(self, eta) -> np.ndarray:
        rel = self._eta(eta) - self.base
        dist = float(np.linalg.norm(self.off_hull(eta)))
        if dist > self.lp_tol * self.scale:
            raise InputError(f"point lies off the affine hull (distance {dist:.3g})", path="eta")
        return self.directions.T @ rel

    def lift_coordinates(self, xi) -> np.ndarray:
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        if xi.shape != (self.dim,):
            raise InputError(f"reduced point must have {self.dim} components", path="xi")
        return self.base + self.directions @ xi

    def reduce_direction(self, theta) -> np.ndarray:
        return self.directions.T @ np.asarray(theta, dtype=float)

    # -- queries --------------------------------------------------------------

    def _certificate(self, a: np.ndarray, eta: np.ndarray) -> SeparationCertificate:
        vals = self.points @ a
        gap = float(a @ eta - np.max(vals))
        if not gap > 0:
            raise NumericalFailure("separating direction does not separate the point")
        a = a / gap
        return SeparationCertificate(a, float(np.max(self.points @ a)))

    def contains(self, eta) -> Membership:
        eta = self._eta(eta)
        off = self.off_hull(eta)
        if float(np.linalg.norm(off)) > self.lp_tol * self.scale:
            return Membership(False, separator=self._certificate(off, eta))
        xi = self.directions.T @ (eta - self.base)
        k = len(self.vertices)
        A = np.vstack([self.reduced_vertices.T, np.ones(k)])
        b = np.concatenate([xi, [1.0]])
        res = simplex(np.zeros(k), A, b, feas_tol=self.lp_tol)
        if res.status == "optimal":
            lam = np.clip(res.x, 0.0, None)
            return Membership(True, weights=lam / lam.sum())
        y = res.farkas
        # y_xi . xi_x + y_0 <= 0 for all vertices, y . b > 0
        a = self.directions @ y[:-1]
        return Membership(False, separator=self._certificate(a, eta))

    def point_weights(self, membership: Membership) -> np.ndarray:
        """Spread vertex weights onto sample points (first occurrence)."""
        lam = np.zeros(len(self.points))
        lam[self.vertex_index] = membership.weights
        return lam

    def relative_interior_contains(self, eta) -> Interior:
        """Maximise the smallest convex weight; positive iff relative interior."""
        eta = self._eta(eta)
        if float(np.linalg.norm(self.off_hull(eta))) > self.lp_tol * self.scale:
            return Interior(False, -math.inf)
        xi = self.directions.T @ (eta - self.base)
        k = len(self.vertices)
        # variables (t, s_1..s_k) with lambda_x = t + s_x
        A = np.zeros((self.dim + 1, k + 1))
        A[:-1, 0] = self.reduced_vertices.sum(axis=0)
        A[:-1, 1:] = self.reduced_vertices.T
        A[-1, 0] = k
        A[-1, 1:] = 1.0
        b = np.concatenate([xi, [1.0]])
        c = np.zeros(k + 1)
        c[0] = -1.0
        res = simplex(c, A, b, feas_tol=self.lp_tol)
        if res.status != "optimal":
            return Interior(False, -math.inf)
        t = float(res.x[0])
        return Interior(t > self.lp_tol, t)

    def is_extreme(self, i: int) -> bool:
        """Whether vertex ``i`` is not a convex combination of the others."""
        others = np.delete(self.vertices, i, axis=0)
        if len(others) == 0:
            return True
        return not MarginalPolytope(others, self.lp_tol).contains(self.vertices[i]).member
