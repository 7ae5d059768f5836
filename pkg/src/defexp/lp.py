"""Dense two-phase simplex method with Bland's rule.

Solves ``min c.x  s.t.  A x = b, x >= 0`` on small dense problems. When the
constraints are infeasible the phase-1 dual ``y`` is returned as a Farkas
certificate: ``y.A_j <= tol`` for every column and ``y.b > 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailure


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    objective: float
    farkas: np.ndarray | None = None
    iterations: int = 0


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    for i in range(T.shape[0]):
        if i != row and T[i, col] != 0.0:
            T[i] -= T[i, col] * T[row]


def _iterate(T, basis, cost, allowed, tol, max_iter):
    """Run simplex pivots on tableau ``T`` (constraint rows, rhs in last column)."""
    m = T.shape[0]
    for it in range(max_iter):
        cb = cost[basis]
        reduced = cost - cb @ T[:, :-1]
        entering = -1
        # Bland: smallest eligible index enters
        for j in np.flatnonzero(allowed):
            if reduced[j] < -tol:
                entering = j
                break
        if entering < 0:
            return "optimal", it
        col = T[:, entering]
        best_ratio = np.inf
        leaving = -1
        for i in range(m):
            if col[i] > tol:
                ratio = T[i, -1] / col[i]
                if ratio < best_ratio - 1e-14 or (
                    abs(ratio - best_ratio) <= 1e-14 and basis[i] < basis[leaving]
                ):
                    best_ratio = ratio
                    leaving = i
        if leaving < 0:
            return "unbounded", it
        _pivot(T, leaving, entering)
        basis[leaving] = entering
    raise NumericalFailure(f"simplex did not terminate in {max_iter} pivots")


def simplex(c, A, b, tol: float = 1e-10, feas_tol: float = 1e-9,
            max_iter: int = 10_000) -> LPResult:
    """``tol`` is the pivoting tolerance, ``feas_tol`` the phase-1 infeasibility cutoff."""
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    sign = np.where(b < 0, -1.0, 1.0)
    A1 = A * sign[:, None]
    b1 = b * sign
    T = np.hstack([A1, np.eye(m), b1[:, None]])
    basis = np.arange(n, n + m)
    phase1_cost = np.concatenate([np.zeros(n), np.ones(m)])
    allowed = np.ones(n + m, dtype=bool)
    _, it1 = _iterate(T, basis, phase1_cost, allowed, tol, max_iter)
    infeas = float(phase1_cost[basis] @ T[:, -1])
    scale = max(1.0, float(np.max(np.abs(b))))
    if infeas > feas_tol * scale:
        # B^-1 sits in the artificial columns
        y1 = phase1_cost[basis] @ T[:, n:n + m]
        return LPResult("infeasible", None, np.inf, farkas=y1 * sign,
                        iterations=it1)

    # drive zero-level artificials out of the basis, dropping redundant rows
    keep = []
    for i in range(T.shape[0]):
        if basis[i] >= n:
            cand = np.flatnonzero(np.abs(T[i, :n]) > tol)
            if cand.size:
                _pivot(T, i, int(cand[0]))
                basis[i] = int(cand[0])
                keep.append(i)
        else:
            keep.append(i)
    T = T[keep]
    basis = basis[keep]

    cost = np.concatenate([c, np.zeros(m)])
    allowed[n:] = False
    status, it2 = _iterate(T, basis, cost, allowed, tol, max_iter)
    if status == "unbounded":
        return LPResult("unbounded", None, -np.inf, iterations=it1 + it2)
    x = np.zeros(n + m)
    x[basis] = T[:, -1]
    x = x[:n]
    return LPResult("optimal", x, float(c @ x), iterations=it1 + it2)
