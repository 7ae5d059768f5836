"""Quick executable property checks behind ``defexp check suite``.

Each group is a function of a seed returning ``(name, passed, detail)``
tuples. Groups share no state and may run concurrently.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from . import oracle
from .conjugate import Status, alpha_star, h_v, legendre_check
from .deformations import Deformation, is_self_dual
from .family import PhiExponentialFamily
from .polytope import MarginalPolytope
from .state_space import SampleSpace

Check = tuple[str, bool, str]


def random_family(rng: np.random.Generator, d: Deformation, n: int | None = None,
                  m: int | None = None) -> PhiExponentialFamily:
    n = n or int(rng.integers(2, 7))
    m = m or int(rng.integers(1, 4))
    mu = rng.uniform(0.5, 2.0, n)
    p = rng.dirichlet(np.ones(n)) / mu
    stats = rng.normal(size=(m, n))
    return PhiExponentialFamily(d, SampleSpace.from_weights(mu), p, stats)


DEFORMATIONS = {
    "classical": Deformation.classical(),
    "kappa=0.25": Deformation.kaniadakis(0.25),
    "kappa=0.5": Deformation.kaniadakis(0.5),
    "kappa=0.9": Deformation.kaniadakis(0.9),
}


def check_deformations(seed: int) -> list[Check]:
    out = []
    v = np.logspace(-4, 4, 200)
    u = np.linspace(-10, 10, 201)
    for name, d in DEFORMATIONS.items():
        rt = float(np.max(np.abs(d.exp_phi(d.ln_phi(v)) - v) / v))
        out.append((f"round_trip[{name}]", rt <= 1e-9, f"{rt:.2e}"))
        sd = is_self_dual(d, u, 1e-10)
        out.append((f"self_dual[{name}]", sd.holds, f"{sd.max_deviation:.2e}"))
        rate = float(np.max(np.abs(d.psi(d.ln_phi(v)) - d.phi(v) / v)))
        out.append((f"rate_identity[{name}]", rate <= 1e-9, f"{rate:.2e}"))
    return out


def check_family(seed: int) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    worst_norm = worst_dk = 0.0
    for name, d in DEFORMATIONS.items():
        for _ in range(5):
            fam = random_family(rng, d)
            theta = rng.uniform(-3, 3, fam.m)
            worst_norm = max(worst_norm, abs(fam.normalization_residual(theta)))
            u = fam.u_of(theta).values
            v = fam.space.center(fam.base_density, rng.normal(size=fam.n))
            h = 1e-5
            fd = (fam.K(u + h * v) - fam.K(u - h * v)) / (2 * h)
            dk = fam.dK(u, v)
            worst_dk = max(worst_dk, abs(dk - fd) / (1 + abs(dk)))
    out.append(("normalization", worst_norm <= 1e-12, f"{worst_norm:.2e}"))
    out.append(("dK_vs_finite_difference", worst_dk <= 1e-6, f"{worst_dk:.2e}"))
    return out


def check_conjugate(seed: int) -> list[Check]:
    rng = np.random.default_rng(seed + 1)
    out = []
    worst_theta = worst_val = 0.0
    outside_ok = True
    for name, d in DEFORMATIONS.items():
        fam = random_family(rng, d, n=4, m=2)
        for _ in range(3):
            rep = legendre_check(fam, rng.uniform(-2, 2, 2))
            worst_theta = max(worst_theta, rep.theta_error)
            worst_val = max(worst_val, rep.value_error)
        far = fam.polytope.vertices.mean(axis=0) + 10.0 * (1 + np.abs(fam.statistics).max()) * rng.normal(size=2)
        res = alpha_star(fam, far)
        outside_ok &= (res.status is Status.INFINITE_OUTSIDE
                       and res.certificate.verify(fam.polytope.points, far)
                       and res.diagnostics["witness_increasing"])
        res = h_v(fam, np.zeros(fam.n))
        outside_ok &= res.finite and bool(res.density_predicate)
    out.append(("legendre_theta", worst_theta <= 1e-7, f"{worst_theta:.2e}"))
    out.append(("legendre_value", worst_val <= 1e-8, f"{worst_val:.2e}"))
    out.append(("outside_polytope", bool(outside_ok), ""))
    return out


def check_polytope(seed: int) -> list[Check]:
    rng = np.random.default_rng(seed + 2)
    disagreements = 0
    for _ in range(3):
        pts = rng.normal(size=(4, 2))
        poly = MarginalPolytope(pts)
        grid = oracle.SimplexGridOracle(pts, step=0.01)
        for _ in range(10):
            lam = rng.dirichlet(np.ones(4))
            scale = rng.choice([0.5, 3.0])
            eta = pts.mean(axis=0) + scale * (lam @ pts - pts.mean(axis=0))
            verdict = grid_verdict(grid, eta)
            if verdict is not None and poly.contains(eta).member != verdict:
                disagreements += 1
    return [("membership_vs_grid", disagreements == 0, f"{disagreements} disagreements")]


def grid_verdict(grid: oracle.SimplexGridOracle, eta) -> bool | None:
    """Membership by the grid oracle, or ``None`` when too close to the boundary.

    Outside means farther than the grid resolution from every grid point.
    Inside means every axis perturbation of size ``2 sqrt(m) tol`` is still
    within resolution; an outside point always has one perturbation that
    moves it at least that far along its separating normal.
    """
    eta = np.asarray(eta, dtype=float)
    if grid.distance(eta) > grid.tol:
        return False
    rho = 2.0 * np.sqrt(eta.size) * grid.tol
    for i in range(eta.size):
        for sign in (-1.0, 1.0):
            probe = eta.copy()
            probe[i] += sign * rho
            if not grid.member(probe):
                return None
    return True


GROUPS: dict[str, Callable[[int], list[Check]]] = {
    "conjugate": check_conjugate,
    "deformations": check_deformations,
    "family": check_family,
    "polytope": check_polytope,
}


def run_suite(seed: int) -> dict[str, list[Check]]:
    with ThreadPoolExecutor() as pool:
        futures = {name: pool.submit(fn, seed) for name, fn in GROUPS.items()}
        return {name: futures[name].result() for name in sorted(futures)}
