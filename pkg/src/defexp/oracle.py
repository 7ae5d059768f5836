"""Brute-force reference computations.

Slow, simple and deliberately independent of the solvers they check: the
logarithm is integrated by a hand-written adaptive Simpson rule from ``phi``
alone, inverses and normalising constants come from plain bisection,
derivatives from central differences, conjugates from grid suprema and
polytope membership from exhaustive grids of convex weights.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

DEFAULT_SEED = 20240601


@dataclass(frozen=True)
class OracleConfig:
    fd_step: float = 1e-5
    quad_tol: float = 1e-12
    grid_box: float = 8.0
    coarse_step: float = 0.05
    refine_rounds: int = 3
    simplex_step: float = 1e-3
    seed: int = DEFAULT_SEED

    @classmethod
    def from_env(cls) -> "OracleConfig":
        seed = os.environ.get("DEFEXP_SEED")
        return cls(seed=int(seed)) if seed else cls()


# -- quadrature and inversion --------------------------------------------------

def adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float,
                     max_depth: int = 60) -> float:
    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return (rec(a, m, fa, flm, fm, left, tol / 2, depth - 1)
                + rec(m, b, fm, frm, fb, right, tol / 2, depth - 1))

    if a == b:
        return 0.0
    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return rec(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, max_depth)


def quad_ln_phi(d, v: float, tol: float = 1e-12) -> float:
    """``int_1^v dy / phi(y)`` using only ``d.phi``, in the variable ``s = ln y``."""
    if v <= 0:
        raise ValueError("v must be positive")

    def integrand(s):
        y = math.exp(s)
        return y / float(d.phi(y))

    return adaptive_simpson(integrand, 0.0, math.log(v), tol)


def invert_increasing(f: Callable[[float], float], target: float, lo: float, hi: float,
                      xtol: float = 1e-15) -> float:
    while f(lo) > target:
        lo = lo - 2.0 * (hi - lo)
    while f(hi) < target:
        hi = hi + 2.0 * (hi - lo)
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if hi - lo <= xtol * max(1.0, abs(mid)) or mid in (lo, hi):
            break
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def invert_ln_phi(d, u: float) -> float:
    """``exp_phi(u)`` by bisection on ``ln_phi`` (search in ``log y``)."""
    s = invert_increasing(lambda s: float(d.ln_phi(math.exp(s))), u, -1.0, 1.0)
    return math.exp(s)


# -- finite differences ----------------------------------------------------------

def fd_derivative(f: Callable[[float], float], x: float, h: float = 1e-5) -> float:
    return (f(x + h) - f(x - h)) / (2.0 * h)


def fd_second(f: Callable[[float], float], x: float, h: float = 1e-4) -> float:
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)


def fd_gradient(f: Callable[[np.ndarray], float], x, h: float = 1e-5) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def fd_hessian(f: Callable[[np.ndarray], float], x, h: float = 1e-4) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = x.size
    out = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h
            ej[j] = h
            val = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h * h)
            out[i, j] = out[j, i] = val
    return out


# -- normalisation, escort and conjugate by brute force --------------------------

def bisect_normalizer(d, t, weights, iters: int = 200) -> np.ndarray:
    """Constants ``c`` with ``sum_x w_x exp_phi(t_x - c) = 1``, for each row of ``t``.

    Vectorised bisection over the bracket ``[min t, max t]``.
    """
    t = np.atleast_2d(np.asarray(t, dtype=float))
    lo = t.min(axis=1)
    hi = t.max(axis=1)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        with np.errstate(over="ignore"):
            f = np.asarray(d.exp_phi(t - mid[:, None])) @ weights
        too_small = f > 1.0  # mid below the root
        lo = np.where(too_small, mid, lo)
        hi = np.where(too_small, hi, mid)
        if np.all(hi - lo <= 1e-15 * np.maximum(1.0, np.abs(mid))):
            break
    return 0.5 * (lo + hi)


def alpha_bisect(d, stats, p, mu, theta) -> float:
    stats = np.atleast_2d(np.asarray(stats, dtype=float))
    w = np.asarray(p, dtype=float) * np.asarray(mu, dtype=float)
    return float(bisect_normalizer(d, np.atleast_1d(theta) @ stats, w)[0])


def escort_brute(d, stats, p, mu, theta) -> np.ndarray:
    """Escort density evaluated pointwise from ``phi``."""
    stats = np.atleast_2d(np.asarray(stats, dtype=float))
    p = np.asarray(p, dtype=float)
    mu = np.asarray(mu, dtype=float)
    a = alpha_bisect(d, stats, p, mu, theta)
    ratio = np.asarray(d.exp_phi(np.atleast_1d(theta) @ stats - a))
    g = np.array([float(d.phi(r)) for r in ratio])
    return g * p / float(np.sum(g * p * mu))


def grid_sup(g: Callable[[np.ndarray], np.ndarray], box, coarse_step: float,
             refine_rounds: int = 3) -> tuple[float, np.ndarray]:
    """Maximise ``g`` (vectorised over rows) on a grid with local 10x refinement.

    ``box`` is a sequence of ``(lo, hi)`` pairs.
    """
    box = [tuple(map(float, b)) for b in box]
    axes = [np.arange(lo, hi + 0.5 * coarse_step, coarse_step) for lo, hi in box]
    step = coarse_step
    best_val, best_x = -np.inf, None
    for rnd in range(refine_rounds + 1):
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(box))
        vals = np.asarray(g(mesh))
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best_x = float(vals[k]), mesh[k].copy()
        if rnd == refine_rounds:
            break
        fine = step / 10.0
        axes = [np.clip(np.arange(x - step, x + step + 0.5 * fine, fine), lo, hi)
                for x, (lo, hi) in zip(best_x, box)]
        step = fine
    return best_val, best_x


def alpha_star_grid(d, stats, p, mu, eta, box: float = 8.0, coarse_step: float = 0.05,
                    refine_rounds: int = 3) -> tuple[float, np.ndarray]:
    stats = np.atleast_2d(np.asarray(stats, dtype=float))
    w = np.asarray(p, dtype=float) * np.asarray(mu, dtype=float)
    eta = np.atleast_1d(np.asarray(eta, dtype=float))

    def g(thetas):
        return thetas @ eta - bisect_normalizer(d, thetas @ stats, w, iters=120)

    return grid_sup(g, [(-box, box)] * stats.shape[0], coarse_step, refine_rounds)


# -- polytope membership -----------------------------------------------------------

def simplex_grid(k: int, step: float) -> np.ndarray:
    """All weight vectors of length ``k`` with entries in ``step * N`` summing to 1."""
    n = int(round(1.0 / step))
    if k == 1:
        return np.ones((1, 1))
    if k == 2:
        i = np.arange(n + 1)
        return np.stack([i, n - i], axis=1) / n
    if k == 3:
        i, j = np.triu_indices(n + 1)
        # i <= j: weights i, j - i, n - j
        return np.stack([i, j - i, n - j], axis=1) / n
    rows = [c for c in itertools.product(range(n + 1), repeat=k - 1) if sum(c) <= n]
    arr = np.array(rows)
    return np.hstack([arr, (n - arr.sum(axis=1))[:, None]]) / n


class SimplexGridOracle:
    """Membership by exhaustive convex-weight grids.

    Uses subsets of ``min(n, dim + 1)`` points (Caratheodory) so that grids
    stay small; a query is a member when some grid combination lies within
    ``tol`` of it.
    """

    def __init__(self, vertices, step: float = 1e-3, tol: float | None = None):
        V = np.atleast_2d(np.asarray(vertices, dtype=float))
        n, m = V.shape
        k = min(n, m + 1)
        if k > 4:
            raise ValueError("simplex grid oracle supports at most 4 points per subset")
        lam = simplex_grid(k, step)
        self.points = np.vstack([lam @ V[list(sub)] for sub in itertools.combinations(range(n), k)])
        diam = float(np.max(np.linalg.norm(V[:, None, :] - V[None, :, :], axis=-1))) if n > 1 else 0.0
        self.tol = tol if tol is not None else k * step * max(diam, 1e-12)
        self._tree = None  # nearest-neighbour index, built on first query

    def distance(self, eta) -> float:
        if self._tree is None:
            self._tree = cKDTree(self.points)
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        return float(self._tree.query(eta)[0])

    def member(self, eta) -> bool:
        return self.distance(eta) <= self.tol


def simplex_grid_member(vertices, eta, step: float = 1e-3) -> bool:
    return SimplexGridOracle(vertices, step).member(eta)


# -- fixture generation ------------------------------------------------------------

def _entry(inputs, value, oracle, tolerance):
    return {"inputs": inputs, "value": value, "oracle": oracle, "tolerance": tolerance}


def derived_values(config: OracleConfig | None = None) -> dict:
    """Compute every example value that needs an independent oracle."""
    from .deformations import Deformation

    config = config or OracleConfig()
    rng = np.random.default_rng(config.seed)
    k5 = Deformation.kaniadakis(0.5)
    cl = Deformation.classical()
    out: dict = {}

    ln4 = quad_ln_phi(k5, 4.0)
    out["ln_phi.kaniadakis_0.5.v4"] = _entry({"kappa": 0.5, "v": 4.0}, ln4, "adaptive_simpson", 1e-10)
    out["phi.kaniadakis_0.5.v4"] = _entry(
        {"kappa": 0.5, "v": 4.0}, 4.0 * float(k5.psi(ln4)), "v*psi(quad ln_phi)", 1e-9)
    e15 = invert_ln_phi(k5, 1.5)
    out["exp_phi.kaniadakis_0.5.u1.5"] = _entry({"kappa": 0.5, "u": 1.5}, e15, "bisection_inverse", 1e-9)
    out["exp_phi.kaniadakis_0.5.u1"] = _entry(
        {"kappa": 0.5, "u": 1.0}, invert_ln_phi(k5, 1.0), "bisection_inverse", 1e-9)
    out["psi.kaniadakis_0.5.u1.5"] = _entry(
        {"kappa": 0.5, "u": 1.5}, float(k5.phi(e15)) / e15, "phi(exp)/exp with bisection_inverse", 1e-9)
    exp_k = lambda u: float(k5.exp_phi(u))
    out["exp_phi_d1.kaniadakis_0.5.u0"] = _entry(
        {"kappa": 0.5, "u": 0.0}, fd_derivative(exp_k, 0.0), "central_difference", 1e-6)
    out["exp_phi_d2.kaniadakis_0.5.u0"] = _entry(
        {"kappa": 0.5, "u": 0.0}, fd_second(exp_k, 0.0), "second_difference", 1e-4)
    out["exp_phi_d1.kaniadakis_0.5.u1.5"] = _entry(
        {"kappa": 0.5, "u": 1.5}, fd_derivative(exp_k, 1.5), "central_difference", 1e-6)

    mu3, p3, u3 = np.ones(3), np.array([0.2, 0.3, 0.5]), np.array([1.0, 2.0, 3.0])
    mean3 = float(sum(a * b * c for a, b, c in zip(u3, p3, mu3)))
    out["expectation.three_point"] = _entry({"mu": mu3.tolist(), "p": p3.tolist(), "u": u3.tolist()},
                                            mean3, "direct_sum", 1e-12)
    centred = [float(x - mean3) for x in u3]
    out["center.three_point"] = _entry({"u": u3.tolist()}, centred, "direct_sum", 1e-12)
    cov3 = float(sum(c * c * b for c, b in zip(centred, p3)))
    out["covariance.three_point"] = _entry({"u": u3.tolist()}, cov3, "direct_sum", 1e-12)
    target = [1.0, 0.0, 0.0]
    coef = sum(t * c * b for t, c, b in zip(target, centred, p3)) / cov3
    out["project.three_point"] = _entry({"basis": [centred], "target": target},
                                        [float(coef * c) for c in centred], "gram_1x1", 1e-12)

    two = {"mu": [0.5, 0.5], "p": [1.0, 1.0], "H": [[0.0, 1.0]]}
    a_cl = math.log((1 + math.e**2) / 2)
    out["alpha.classical.two_point.theta2"] = _entry(dict(two, theta=[2.0]), a_cl, "closed_form", 1e-10)
    out["K.classical.two_point.theta2"] = _entry(dict(two, theta=[2.0]), a_cl - 1.0, "closed_form", 1e-10)
    gibbs = [2.0 / (1 + math.e**2), 2.0 * math.e**2 / (1 + math.e**2)]
    out["density.classical.two_point.theta2"] = _entry(dict(two, theta=[2.0]), gibbs, "closed_form", 1e-10)
    out["dK.classical.two_point.theta2"] = _entry(
        dict(two, theta=[2.0]), math.e**2 / (1 + math.e**2) - 0.5, "closed_form", 1e-10)
    a_k = alpha_bisect(k5, two["H"], two["p"], two["mu"], [2.0])
    out["alpha.kaniadakis_0.5.two_point.theta2"] = _entry(dict(two, theta=[2.0], kappa=0.5), a_k,
                                                          "bisection", 1e-12)
    out["escort.kaniadakis_0.5.two_point.theta2"] = _entry(
        dict(two, theta=[2.0], kappa=0.5),
        escort_brute(k5, two["H"], two["p"], two["mu"], [2.0]).tolist(), "pointwise_phi", 1e-10)
    out["divergence.kaniadakis_0.5.two_point.theta2"] = _entry(
        dict(two, theta=[2.0], kappa=0.5), a_k - 1.0, "bisection K = alpha - theta.E_p[H]", 1e-9)

    q3 = rng.dirichlet(np.ones(3))
    lr = np.array([float(k5.ln_phi(x)) for x in q3 / p3])
    out["recover_u.kaniadakis_0.5.three_point"] = _entry(
        {"mu": mu3.tolist(), "p": p3.tolist(), "q": q3.tolist(), "kappa": 0.5},
        (lr - float(np.dot(lr, p3))).tolist(), "pointwise", 1e-12)

    # polytope
    out["separation.segment.eta3.5"] = _entry(
        {"points": [1.0, 2.0, 3.0], "eta": 3.5}, {"a": 2.0, "a0": 6.0}, "hand_solve_1d", 1e-9)
    sq = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    lam = simplex_grid(4, 0.05)
    hits = np.linalg.norm(lam @ sq - 0.5, axis=1) < 1e-12
    out["interior_slack.square.centroid"] = _entry(
        {"points": sq.tolist(), "eta": [0.5, 0.5]}, float(np.max(lam[hits].min(axis=1))),
        "weight_grid_max_min", 1e-9)

    # conjugates
    eta_cl = math.e**2 / (1 + math.e**2)
    val, arg = alpha_star_grid(cl, two["H"], two["p"], two["mu"], [eta_cl], coarse_step=0.01)
    out["alpha_star.classical.two_point.eta_theta2"] = _entry(
        dict(two, eta=[eta_cl]), {"value": 2 * eta_cl - a_cl, "grid_value": val, "theta": 2.0},
        "closed_form_legendre+grid_sup", 1e-6)
    eta_k = 0.7
    val_k, arg_k = alpha_star_grid(k5, two["H"], two["p"], two["mu"], [eta_k], coarse_step=0.01)
    out["alpha_star.kaniadakis_0.5.two_point.eta0.7"] = _entry(
        dict(two, eta=[eta_k], kappa=0.5), {"value": val_k, "theta": float(arg_k[0])}, "grid_sup", 1e-6)
    return dict(sorted(out.items()))


def write_derived_values(path, config: OracleConfig | None = None) -> dict:
    values = derived_values(config)
    text = json.dumps(values, indent=2, sort_keys=True) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
    return values
