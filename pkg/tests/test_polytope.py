import numpy as np
import pytest
from hypothesis import given, strategies as st

from defexp import InputError, MarginalPolytope, oracle
from defexp.checks import grid_verdict
from defexp.lp import simplex

SEG = MarginalPolytope.build([[1.0, 2.0, 3.0]])
SQUARE = MarginalPolytope(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]))


def test_build_dimensions(rng):
    assert SEG.dim == 1
    np.testing.assert_allclose(sorted(SEG.vertices.ravel()), [1.0, 2.0, 3.0])
    stats = rng.normal(size=(2, 4))
    assert MarginalPolytope.build(stats).dim == 2
    const = MarginalPolytope.build([[2.0, 2.0, 2.0]])
    assert const.dim == 0 and len(const.vertices) == 1


def test_segment_membership():
    mem = SEG.contains(2.0)
    assert mem.member and mem.separator is None
    assert float(mem.weights @ SEG.vertices[:, 0]) == pytest.approx(2.0, abs=1e-12)
    vert = SEG.contains(3.0)
    assert vert.member
    np.testing.assert_allclose(SEG.point_weights(vert), [0.0, 0.0, 1.0], atol=1e-12)


def test_segment_separation(derived):
    mem = SEG.contains(3.5)
    assert not mem.member and mem.weights is None
    cert = mem.separator
    ref = derived["separation.segment.eta3.5"]["value"]
    assert cert.a[0] == pytest.approx(ref["a"], abs=1e-9)
    assert cert.a0 == pytest.approx(ref["a0"], abs=1e-9)
    assert float(cert.a @ [3.5]) == pytest.approx(cert.a0 + 1.0, abs=1e-12)
    assert cert.verify(SEG.points, [3.5])
    assert mem.to_json() == {"member": False, "separator": {"a": [2.0], "a0": 6.0}}


def test_relative_interior_examples(derived):
    res = SEG.relative_interior_contains(2.0)
    assert res.inside and res.slack > 0
    res = SEG.relative_interior_contains(3.0)
    assert not res.inside and res.slack == pytest.approx(0.0, abs=1e-12)
    res = SQUARE.relative_interior_contains([0.5, 0.5])
    assert res.inside
    assert res.slack == pytest.approx(0.25, abs=1e-12)
    assert res.slack == pytest.approx(derived["interior_slack.square.centroid"]["value"], abs=1e-9)
    assert not SEG.relative_interior_contains(5.0).inside


def test_coordinates_collinear_points():
    poly = MarginalPolytope(np.array([[0.0, 0.0], [1.0, 2.0], [2.0, 4.0]]))
    assert poly.dim == 1 and poly.ambient_dim == 2
    xi = poly.reduce_coordinates([0.5, 1.0])
    assert xi.shape == (1,)
    np.testing.assert_allclose(poly.lift_coordinates(xi), [0.5, 1.0], atol=1e-14)
    with pytest.raises(InputError, match="distance"):
        poly.reduce_coordinates([1.0, 0.0])
    mem = poly.contains([1.0, 0.0])
    assert not mem.member and mem.separator.verify(poly.points, [1.0, 0.0])
    assert poly.contains([1.0, 2.0]).member


def test_coordinates_full_rank_invertible():
    xi = SQUARE.reduce_coordinates([0.3, 0.9])
    np.testing.assert_allclose(SQUARE.lift_coordinates(xi), [0.3, 0.9], atol=1e-14)


def test_duplicate_vertices_collapse():
    poly = MarginalPolytope(np.array([[0.0], [1.0], [1.0], [0.0]]))
    assert len(poly.vertices) == 2
    lam = poly.point_weights(poly.contains([0.25]))
    assert lam[2] == 0.0 and lam[3] == 0.0
    assert poly.relative_interior_contains([0.5]).inside


def test_vertices_not_interior(rng):
    pts = rng.normal(size=(4, 2))
    poly = MarginalPolytope(pts)
    for i in range(4):
        if poly.is_extreme(i):
            assert poly.contains(pts[i]).member
            assert not poly.relative_interior_contains(pts[i]).inside


def test_lp_basic():
    # max x + y subject to x + 2y = 4, 3x + y = 7
    res = simplex([-1.0, -1.0], [[1.0, 2.0], [3.0, 1.0]], [4.0, 7.0])
    assert res.status == "optimal"
    np.testing.assert_allclose(res.x, [2.0, 1.0], atol=1e-12)
    res = simplex([0.0, 0.0], [[1.0, 1.0]], [-1.0])
    assert res.status == "infeasible"
    # Farkas: y . A <= 0 while y . b > 0
    y = res.farkas
    assert np.all(y @ np.array([[1.0, 1.0]]) <= 1e-12) and y @ [-1.0] > 0


def test_lp_redundant_rows():
    res = simplex([1.0, 0.0, 0.0], [[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]], [1.0, 2.0])
    assert res.status == "optimal"
    assert res.objective == pytest.approx(0.0, abs=1e-12)


# -- properties ----------------------------------------------------------------------

seeds = st.integers(0, 2**32 - 1)


def random_points(rng):
    n = int(rng.integers(2, 6))
    m = int(rng.integers(1, 4))
    return rng.normal(size=(n, m))


@given(seed=seeds)
def test_membership_exclusive_and_verified(seed):
    rng = np.random.default_rng(seed)
    pts = random_points(rng)
    poly = MarginalPolytope(pts)
    lam = rng.dirichlet(np.ones(len(pts)))
    inside = lam @ pts
    mem = poly.contains(inside)
    assert mem.member and mem.separator is None
    assert np.max(np.abs(poly.point_weights(mem) @ pts - inside)) <= 1e-8
    direction = rng.normal(size=pts.shape[1])
    far = pts.mean(axis=0) + 100.0 * (1 + np.abs(pts).max()) * direction / np.linalg.norm(direction)
    mem = poly.contains(far)
    assert not mem.member and mem.weights is None
    assert mem.separator.verify(pts, far)


@given(seed=seeds)
def test_membership_invariant_under_permutation_and_duplicates(seed):
    rng = np.random.default_rng(seed)
    pts = random_points(rng)
    eta = pts.mean(axis=0) + rng.normal(size=pts.shape[1])
    ref = MarginalPolytope(pts).contains(eta).member
    perm = pts[rng.permutation(len(pts))]
    assert MarginalPolytope(perm).contains(eta).member == ref
    dup = np.vstack([pts, pts[:1]])
    assert MarginalPolytope(dup).contains(eta).member == ref


@given(seed=seeds)
def test_interior_implies_member(seed):
    rng = np.random.default_rng(seed)
    pts = random_points(rng)
    poly = MarginalPolytope(pts)
    eta = pts.mean(axis=0) + 0.5 * rng.normal(size=pts.shape[1])
    if poly.relative_interior_contains(eta).inside:
        assert poly.contains(eta).member


@given(seed=seeds)
def test_membership_agrees_with_grid(seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(int(rng.integers(2, 5)), 2))
    grid = oracle.SimplexGridOracle(pts, step=0.01)
    lam = rng.dirichlet(np.ones(len(pts)))
    eta = pts.mean(axis=0) + rng.choice([0.5, 3.0]) * (lam @ pts - pts.mean(axis=0))
    verdict = grid_verdict(grid, eta)
    if verdict is not None:
        assert MarginalPolytope(pts).contains(eta).member == verdict
