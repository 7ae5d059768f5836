import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import three_point, two_point
from defexp import (Deformation, InputError, PhiExponentialFamily, UnsupportedIdentityError,
                    ValidationError, oracle)
from defexp.checks import random_family

CLASSICAL = Deformation.classical()
KAN = Deformation.kaniadakis(0.5)
DEFS = [CLASSICAL, Deformation.kaniadakis(0.25), KAN, Deformation.kaniadakis(0.9)]
IDS = ["classical", "k0.25", "k0.5", "k0.9"]


# -- documented values ---------------------------------------------------------------

@pytest.mark.parametrize("d", DEFS, ids=IDS)
def test_alpha_at_zero(d, rng):
    fam = random_family(rng, d)
    assert fam.alpha(np.zeros(fam.m)) == 0.0
    np.testing.assert_allclose(fam.density(np.zeros(fam.m)), fam.base_density, rtol=1e-15)


def test_classical_two_point(derived):
    fam = two_point(CLASSICAL)
    a = math.log((1 + math.e**2) / 2)
    assert fam.alpha([2.0]) == pytest.approx(a, abs=1e-10)
    assert fam.alpha([2.0]) == pytest.approx(derived["alpha.classical.two_point.theta2"]["value"], abs=1e-10)
    gibbs = np.array([1.0, math.e**2]) / (1 + math.e**2) * 2
    np.testing.assert_allclose(fam.density([2.0]), gibbs, atol=1e-12)
    np.testing.assert_allclose(fam.density([2.0]), derived["density.classical.two_point.theta2"]["value"],
                               atol=1e-10)
    u, K = fam.theta_to_u([2.0])
    assert K == pytest.approx(a - 1.0, abs=1e-10)
    assert K == pytest.approx(derived["K.classical.two_point.theta2"]["value"], abs=1e-10)
    v = fam.basis[0]
    mean = math.e**2 / (1 + math.e**2)
    assert fam.dK(u, v) == pytest.approx(mean - 0.5, abs=1e-10)
    assert fam.dK(u, v) == pytest.approx(derived["dK.classical.two_point.theta2"]["value"], abs=1e-10)


def test_kaniadakis_two_point(derived):
    fam = two_point(KAN)
    a = fam.alpha([2.0])
    assert 0.0 <= a <= 2.0
    assert abs(fam.normalization_residual([2.0])) <= 1e-12
    assert a == pytest.approx(derived["alpha.kaniadakis_0.5.two_point.theta2"]["value"], abs=1e-12)
    q = fam.density([2.0])
    assert float(q @ fam.space.mu) == pytest.approx(1.0, abs=1e-12)
    esc = fam.escort_theta([2.0])
    assert np.all(esc > 0)
    np.testing.assert_allclose(esc, derived["escort.kaniadakis_0.5.two_point.theta2"]["value"], atol=1e-10)
    _, K = fam.theta_to_u([2.0])
    assert fam.divergence(q) == pytest.approx(K, abs=1e-9)
    assert fam.divergence(q) == pytest.approx(derived["divergence.kaniadakis_0.5.two_point.theta2"]["value"],
                                              abs=1e-9)


def test_recover_u_three_point(derived):
    fam = three_point(KAN)
    q = np.array(derived["recover_u.kaniadakis_0.5.three_point"]["inputs"]["q"])
    np.testing.assert_allclose(fam.recover_u(q), derived["recover_u.kaniadakis_0.5.three_point"]["value"],
                               atol=1e-12)
    np.testing.assert_allclose(fam.recover_u(fam.base_density), 0.0, atol=1e-15)


def test_chart_at_zero_and_round_trip(rng):
    fam = random_family(rng, KAN, n=5, m=2)
    u, K = fam.theta_to_u(np.zeros(2))
    assert K == 0.0 and np.all(u.values == 0.0)
    theta = rng.normal(size=2)
    u, _ = fam.theta_to_u(theta)
    np.testing.assert_array_equal(fam.u_to_theta(u), theta)
    np.testing.assert_allclose(fam.u_to_theta(u.values), theta, atol=1e-10)
    with pytest.raises(InputError):
        fam.u_to_theta(np.eye(5)[0])


@pytest.mark.parametrize("d", DEFS, ids=IDS)
def test_escort_special_cases(d, rng):
    fam = random_family(rng, d, n=4)
    np.testing.assert_allclose(fam.escort(np.zeros(4)), fam.base_density, rtol=1e-14)
    assert fam.dK(np.zeros(4), fam.basis[0]) == pytest.approx(0.0, abs=1e-14)
    np.testing.assert_allclose(fam.grad_alpha(np.zeros(fam.m)), fam.mean_statistics, atol=1e-14)


def test_classical_escort_is_density(rng):
    fam = random_family(rng, CLASSICAL, n=5, m=2)
    theta = rng.normal(size=2)
    np.testing.assert_allclose(fam.escort_theta(theta), fam.density(theta), rtol=1e-12)
    np.testing.assert_allclose(fam.grad_alpha(theta), fam.statistics @ (fam.density(theta) * fam.space.mu),
                               rtol=1e-12)


@pytest.mark.parametrize("d", DEFS, ids=IDS)
def test_d2K_at_zero_is_covariance(d, rng):
    fam = random_family(rng, d, n=5)
    v = fam.space.center(fam.base_density, rng.normal(size=5))
    w = fam.space.center(fam.base_density, rng.normal(size=5))
    phi1 = oracle.fd_derivative(d.phi, 1.0, 1e-5)
    cov = fam.space.covariance(fam.base_density, v, w)
    assert fam.d2K(np.zeros(5), v, w) == pytest.approx(phi1 * cov, abs=1e-8)
    assert fam.d2K(np.zeros(5), v, w) == pytest.approx(cov, abs=1e-8)


def test_divergence_classical_is_kl(rng):
    fam = random_family(rng, CLASSICAL, n=4)
    q = fam.density(rng.normal(size=fam.m))
    kl = float(np.sum(fam.weights * np.log(fam.base_density / q)))
    assert fam.divergence(q) == pytest.approx(kl, abs=1e-12)
    assert fam.divergence(fam.base_density) == 0.0


def test_divergence_refuses_non_self_dual():
    d = Deformation.from_psi(lambda u: math.exp(u * u + u), validate=False)
    fam = PhiExponentialFamily(d, three_point(KAN).space, [0.2, 0.3, 0.5], [[1.0, 2.0, 3.0]])
    with pytest.raises(UnsupportedIdentityError):
        fam.divergence(fam.base_density)


def test_large_theta_does_not_overflow():
    fam = two_point(KAN)
    assert abs(fam.normalization_residual([1000.0])) <= 1e-12
    assert abs(fam.normalization_residual([-1000.0])) <= 1e-12


@pytest.mark.parametrize("obj,path", [
    ({"deformation": {"kind": "classical"}, "space": {"mu": [1, 1]}, "base_density": [0.5, 0.6],
      "statistics": [[0, 1]]}, "base_density"),
    ({"deformation": {"kind": "classical"}, "space": {"mu": [1, 1]}, "base_density": [1.0, 0.0],
      "statistics": [[0, 1]]}, "base_density[1]"),
    ({"deformation": {"kind": "classical"}, "space": {"mu": [1, 1]}, "base_density": [0.5, 0.5],
      "statistics": [[0, 1, 2]]}, "statistics[0]"),
    ({"deformation": {"kind": "classical"}, "space": {"mu": [1, 1]}, "base_density": [0.5, 0.5]},
     "statistics"),
    ({"deformation": {"kind": "classical"}, "space": {"mu": [1, 1]}, "base_density": [0.5, 0.5],
      "statistics": [[0, 1]], "tolerances": {"alpha_tol": -1}}, "tolerances.alpha_tol"),
])
def test_model_json_errors(obj, path):
    with pytest.raises(ValidationError) as err:
        PhiExponentialFamily.from_json(obj)
    assert err.value.path == path


def test_model_json_round_trip():
    fam = three_point(KAN)
    again = PhiExponentialFamily.from_json(fam.to_json())
    assert again.alpha([0.7]) == fam.alpha([0.7])


# -- properties ----------------------------------------------------------------------

seeds = st.integers(0, 2**32 - 1)
defs = st.sampled_from(DEFS)


@given(seed=seeds, d=defs)
def test_normalization_property(seed, d):
    rng = np.random.default_rng(seed)
    fam = random_family(rng, d)
    theta = rng.uniform(-5, 5, fam.m)
    assert abs(fam.normalization_residual(theta)) <= 1e-12
    q = fam.density(theta)
    assert abs(float(q @ fam.space.mu) - 1.0) <= 1e-12


@given(seed=seeds, d=defs)
def test_chart_consistency_property(seed, d):
    rng = np.random.default_rng(seed)
    fam = random_family(rng, d)
    theta = rng.uniform(-3, 3, fam.m)
    u, _ = fam.theta_to_u(theta)
    np.testing.assert_allclose(fam.recover_u(fam.density(theta)), u.values, atol=1e-9)


@given(seed=seeds, d=defs)
def test_gradient_matches_finite_differences(seed, d):
    rng = np.random.default_rng(seed)
    fam = random_family(rng, d)
    theta = rng.uniform(-2, 2, fam.m)
    u = fam.u_of(theta).values
    v = fam.space.center(fam.base_density, rng.normal(size=fam.n))
    h = 1e-5
    fd = (fam.K(u + h * v) - fam.K(u - h * v)) / (2 * h)
    dk = fam.dK(u, v)
    assert abs(dk - fd) / (1 + abs(dk)) <= 1e-6
    g = fam.grad_alpha(theta)
    fd_g = oracle.fd_gradient(fam.alpha, theta)
    assert np.max(np.abs(g - fd_g) / (1 + np.abs(g))) <= 1e-6


@given(seed=seeds, d=defs)
def test_hessian_properties(seed, d):
    rng = np.random.default_rng(seed)
    fam = random_family(rng, d)
    u = fam.u_of(rng.uniform(-2, 2, fam.m)).values
    v = fam.space.center(fam.base_density, rng.normal(size=fam.n))
    w = fam.space.center(fam.base_density, rng.normal(size=fam.n))
    assert fam.d2K(u, v, w) == fam.d2K(u, w, v)
    assert fam.d2K(u, v, v) > 0
    h = 1e-4
    fd = (fam.K(u + h * v + h * w) - fam.K(u + h * v - h * w)
          - fam.K(u - h * v + h * w) + fam.K(u - h * v - h * w)) / (4 * h * h)
    exact = fam.d2K(u, v, w)
    assert abs(exact - fd) <= 1e-4 * (1 + abs(exact))


@given(seed=seeds, d=defs)
def test_strict_convexity_of_K(seed, d):
    rng = np.random.default_rng(seed)
    fam = random_family(rng, d)
    u1 = fam.space.center(fam.base_density, rng.normal(size=fam.n))
    u2 = fam.space.center(fam.base_density, rng.normal(size=fam.n))
    if np.max(np.abs(u1 - u2)) < 1e-3:
        return
    assert fam.K(0.5 * (u1 + u2)) < 0.5 * (fam.K(u1) + fam.K(u2))


@given(seed=seeds)
def test_classical_matches_log_partition(seed):
    rng = np.random.default_rng(seed)
    fam = random_family(rng, CLASSICAL)
    theta = rng.uniform(-5, 5, fam.m)
    t = theta @ fam.statistics
    ref = float(np.max(t) + np.log(np.sum(fam.weights * np.exp(t - np.max(t)))))
    assert fam.alpha(theta) == pytest.approx(ref, abs=1e-10)


@given(seed=seeds, d=defs)
def test_alpha_matches_bisection_oracle(seed, d):
    rng = np.random.default_rng(seed)
    fam = random_family(rng, d)
    theta = rng.uniform(-3, 3, fam.m)
    ref = oracle.alpha_bisect(d, fam.statistics, fam.base_density, fam.space.mu, theta)
    assert fam.alpha(theta) == pytest.approx(ref, abs=1e-10)
    np.testing.assert_allclose(fam.escort_theta(theta),
                               oracle.escort_brute(d, fam.statistics, fam.base_density, fam.space.mu, theta), atol=1e-9)
