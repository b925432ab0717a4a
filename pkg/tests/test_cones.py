import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from treemarkets import RandomCone, affine_ball_radius, castaing, cone_leq, cone_order, gram_reconstruct, \
    interior_ball_radius, kabanov_model, orthant, path_tree, ri_selection, scalarize, vector_na_check, \
    vector_superhedge_feasible
from treemarkets.arbitrage import ARBITRAGE, NA_UP_TO_SEARCH
from treemarkets.cones import ConeSelection, gram_residual, in_relative_interior, lower_element, \
    superadditivity_gap
from treemarkets.errors import ConeMismatch, InconsistentScalarizations, NotInterior, NotRelativeInterior, \
    SingularGram, TargetMismatch

from oracles import kabanov_arbitrage_oracle, kabanov_instance, random_cone


def kab(pi=0.1):
    return kabanov_model(path_tree(1), {"o": [1.0, 1.0], "o0": [1.0, 1.0]}, pi)


def same_cone(A, B, tol=1e-7):
    return all(B.contains_nnls(0, g, tol)[0] for g in A.leaf(0)) and \
        all(A.contains_nnls(0, g, tol)[0] for g in B.leaf(0))


def test_polar_examples():
    assert same_cone(orthant(2).polar(), orthant(2))
    half = RandomCone([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
    np.testing.assert_allclose(half.polar().leaf(0), [[0.0, 1.0]], atol=1e-12)
    full = RandomCone([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    assert full.polar().leaf(0).shape[0] == 0
    assert RandomCone(np.zeros((0, 2))).contains(0, [[0.0, 0.0]])[0]


def test_ri_selection_examples():
    np.testing.assert_allclose(ri_selection(orthant(2)).values[0], [0.5, 0.25])
    ray = RandomCone([[1.0, 1.0]])
    np.testing.assert_allclose(ri_selection(ray).values[0], [0.5 / np.sqrt(2)] * 2, atol=1e-15)
    assert in_relative_interior(ray, ri_selection(ray).values)


def test_radii():
    K = orthant(2)
    assert interior_ball_radius(K, [1.0, 1.0])[0] == 0.5
    np.testing.assert_allclose(interior_ball_radius(K, [1.0, 0.2])[0], 0.1, atol=1e-15)
    with pytest.raises(NotInterior):
        interior_ball_radius(K, [1.0, 0.0])
    ray = RandomCone([[1.0, 0.0]])
    # half the distance to the apex, measured within the line
    assert affine_ball_radius(ray, [1.0, 0.0])[0] == 0.5
    with pytest.raises(NotRelativeInterior):
        affine_ball_radius(ray, [1.0, 0.1])
    assert affine_ball_radius(K, [1.0, 0.2])[0] == interior_ball_radius(K, [1.0, 0.2])[0]


def test_planar_cone_in_r3():
    K = RandomCone([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    rho = ri_selection(K).values[0]
    r = affine_ball_radius(K, rho)[0]
    assert r > 0
    rng = np.random.default_rng(0)
    for _ in range(200):
        e = rng.normal(size=2)
        e = r * 0.999 * e / np.linalg.norm(e)
        assert K.contains(0, rho + np.array([e[0], e[1], 0.0]))[0]


def test_cone_order_examples():
    K = orthant(2)
    assert cone_leq([1.0, 2.0], [1.0, 2.0], K)
    assert not cone_leq([1.0, -0.1], [0.0, 0.0], K)
    res = cone_order(ri_selection(K).values, [0.0, 0.0], K)
    assert res.holds and res.margins[0] > 0
    with pytest.raises(ConeMismatch):
        cone_leq([1.0, 2.0, 3.0], [0.0, 0.0, 0.0], K)


def test_castaing_orthant():
    fam = castaing(orthant(2))
    vals = np.array([z.values[0] for z in fam])
    assert any(np.allclose(v, [1, 0]) for v in vals) and any(np.allclose(v, [0, 1]) for v in vals)
    assert all(orthant(2).contains(0, v)[0] for v in vals)


def test_scalarize_examples():
    km = kab()
    Z = ConeSelection([[0.5, 0.25]], "ri K°")
    vz = scalarize(km, Z, orthant(2))
    np.testing.assert_allclose(vz.everywhere([[1.0, 0.0]])[0], [-0.3], atol=1e-15)
    assert np.all(vz.everywhere([[0.0, 0.0]]) == 0)
    with pytest.raises(TargetMismatch):
        scalarize(km, ConeSelection([[1.0, 0.0]]), orthant(2))


@settings(max_examples=30, deadline=None)
@given(a=st.integers(1, 16), b=st.integers(1, 16), seed=st.integers(0, 1000))
def test_scalarization_linearity(a, b, seed):
    rng = np.random.default_rng(seed)
    km = kab(0.125)
    Z1 = ConeSelection(rng.integers(1, 9, (1, 2)) / 8.0)
    Z2 = ConeSelection(rng.integers(1, 9, (1, 2)) / 8.0)
    X = rng.integers(-8, 9, (5, 2)) / 8.0
    lhs = scalarize(km, (a / 4) * Z1 + (b / 4) * Z2).everywhere(X)
    rhs = (a / 4) * scalarize(km, Z1).everywhere(X) + (b / 4) * scalarize(km, Z2).everywhere(X)
    assert np.array_equal(lhs, rhs)


def test_vector_na_examples():
    v = vector_na_check(kab(0.1), orthant(2))
    assert v.status == NA_UP_TO_SEARCH and v.margin < 0
    v = vector_na_check(kab(0.0), orthant(2))
    assert v.status == ARBITRAGE and v.metadata["validated"]
    assert abs(v.margin) < 1e-7


@pytest.mark.parametrize("seed", range(5))
def test_vector_na_matches_oracle(seed):
    km, K = kabanov_instance(np.random.default_rng(100 + seed))
    assert vector_na_check(km, K).is_arbitrage == kabanov_arbitrage_oracle(km, K)


def test_gram_round_trip():
    km = kab(0.1)
    K = orthant(2)
    fam = [s for s in castaing(K) if s.target == "ri K°"][:3]
    reps = [(Z, scalarize(km, Z)) for Z in fam]
    grid = np.random.default_rng(0).uniform(-1, 1, (50, 2))
    rec = gram_reconstruct(reps, K, grid)
    assert gram_residual(rec, grid) <= 1e-8
    np.testing.assert_allclose(rec.everywhere(grid), km.everywhere(grid), atol=1e-12)
    assert rec.metadata()["dims"] == {"o0": 2}


def test_gram_orthogonal_and_errors():
    km = kab(0.1)
    K = orthant(2)
    Z1, Z2 = ConeSelection([[2.0, 0.0]]), ConeSelection([[0.0, 3.0]])
    rec = gram_reconstruct([(Z1, scalarize(km, Z1)), (Z2, scalarize(km, Z2))], K)
    X = np.array([[1.0, 0.0], [0.3, -0.7]])
    np.testing.assert_allclose(rec.everywhere(X), km.everywhere(X), atol=1e-14)
    with pytest.raises(SingularGram):
        gram_reconstruct([(Z1, scalarize(km, Z1))], K)
    other = kab(0.3)
    Z3 = ConeSelection([[1.0, 1.0]])
    with pytest.raises(InconsistentScalarizations):
        gram_reconstruct([(Z1, scalarize(km, Z1)), (Z2, scalarize(km, Z2)), (Z3, scalarize(other, Z3))], K, X)


def test_superadditivity_gap_linear_is_zero():
    km = kab(0.1)
    gap = superadditivity_gap(lambda Z: scalarize(km, Z), ConeSelection([[1.0, 0.5]]), ConeSelection([[0.25, 1.0]]),
                              np.random.default_rng(1).uniform(-1, 1, (30, 2)))
    assert abs(gap) < 1e-12


def test_vector_superhedge():
    km = kab(0.1)
    K = orthant(2)
    theta = np.array([[0.4, 0.0]])
    ok, w = vector_superhedge_feasible(km, K, km.everywhere(theta)[0], 1.0, 11)
    assert ok
    assert not vector_superhedge_feasible(km, K, [10.0, 10.0], 1.0, 11)[0]
    ok, w = vector_superhedge_feasible(km, K, [-5.0, -5.0], 1.0, 11)
    assert ok and np.all(w.values == -1.0)


def test_lower_element():
    K = orthant(2)
    x = np.array([1.0, 1.0])
    g = lower_element(K, x, 3.0)[0]
    np.testing.assert_allclose(g, [-6.0, -6.0])
    rng = np.random.default_rng(2)
    for _ in range(200):
        y = rng.normal(size=2)
        y = 3.0 * y / np.linalg.norm(y) * rng.uniform()
        assert K.contains(0, y - g)[0]


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_bipolar_and_order_consistency(seed):
    rng = np.random.default_rng(seed)
    K = random_cone(rng)
    assert same_cone(K, K.polar().polar())
    X = rng.normal(size=(300, K.n))
    np.testing.assert_array_equal(K.contains(0, X), K.contains_nnls(0, X, 1e-7))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_ri_perturbation(seed):
    rng = np.random.default_rng(seed)
    K = random_cone(rng)
    rho = ri_selection(K).values
    r = affine_ball_radius(K, rho)[0]
    assert r > 0
    # a cone that is a subspace has an unbounded radius inside its span
    r = min(r, 10.0)
    G = K.leaf(0)
    span = np.linalg.svd(G)[2][:np.linalg.matrix_rank(G)] if G.size else np.zeros((0, K.n))
    for _ in range(50):
        c = rng.normal(size=span.shape[0])
        if not c.any():
            continue
        e = (c @ span)
        e = 0.999 * r * e / np.linalg.norm(e)
        assert K.contains(0, rho[0] + e, 1e-9)[0]
