import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from treemarkets import AdaptedStrategy, build_tree, enumerate_adapted_grid, ft_sets, path_tree, random_tree, \
    restrict_to_path, uniform_tree
from treemarkets.errors import BudgetExceeded, InvalidGrid, MalformedTree, ProbabilityError

from conftest import binomial_tree, trinomial


def test_binomial_leaf_probs():
    tree = binomial_tree()
    assert tree.T == 1 and tree.n_leaves == 2
    np.testing.assert_array_equal(tree.leaf_prob, [0.5, 0.5])


def test_single_path_tree():
    tree = path_tree(3)
    assert tree.T == 3 and tree.n_leaves == 1
    assert tree.leaf_prob[0] == 1.0


def test_trinomial_probs_are_products():
    tree = trinomial(2)
    assert tree.n_leaves == 9
    q = np.array([0.25, 0.5, 0.25])
    np.testing.assert_allclose(tree.leaf_prob, np.outer(q, q).reshape(-1), rtol=0, atol=1e-15)
    assert abs(tree.leaf_prob.sum() - 1.0) < 1e-12


@pytest.mark.parametrize("nodes, err", [
    ([{"id": "o", "time": 0, "parent": None}, {"id": "a", "time": 1, "parent": "x", "prob": 1.0}], MalformedTree),
    ([{"id": "o", "time": 0, "parent": None}, {"id": "a", "time": 2, "parent": "o", "prob": 1.0}], MalformedTree),
    ([{"id": "o", "time": 0, "parent": None}], MalformedTree),
    ([{"id": "o", "time": 0, "parent": None}, {"id": "a", "time": 1, "parent": "o", "prob": 0.0},
      {"id": "b", "time": 1, "parent": "o", "prob": 1.0}], ProbabilityError),
    ([{"id": "o", "time": 0, "parent": None}, {"id": "a", "time": 1, "parent": "o", "prob": 0.6},
      {"id": "b", "time": 1, "parent": "o", "prob": 0.6}], ProbabilityError),
    ([{"id": "o", "time": 0, "parent": None}, {"id": "p", "time": 0, "parent": None}], MalformedTree),
    ([{"id": "o", "time": 0, "parent": None}, {"id": "a", "time": 1, "parent": "o", "prob": 1.0},
      {"id": "b", "time": 2, "parent": "a", "prob": 1.0}, {"id": "c", "time": 1, "parent": "o", "prob": 1e-30}],
     MalformedTree),
])
def test_build_errors(nodes, err):
    with pytest.raises(err):
        build_tree(nodes)


def test_restrict_to_path():
    tree = binomial_tree()
    q = AdaptedStrategy.constant(tree, [0.7])
    for leaf in tree.leaf_ids:
        np.testing.assert_array_equal(restrict_to_path(q, leaf), [0.7])
    z = AdaptedStrategy.zeros(uniform_tree(2, 3), 2)
    assert restrict_to_path(z, z.tree.leaf_ids[0]).shape == (6,)


def test_restrict_node_index_strategy():
    tree = uniform_tree(2, 2)
    s = AdaptedStrategy.from_mapping(tree, {n: float(i) for i, n in enumerate(tree.ids) if tree.time[i] < 2}, 1)
    # root is index 0 and "o0" is index 1 in breadth-first order
    np.testing.assert_array_equal(restrict_to_path(s, "o00"), [0.0, 1.0])
    with pytest.raises(MalformedTree):
        restrict_to_path(s, "o0")


def test_enumerate_counts():
    assert len(list(enumerate_adapted_grid(binomial_tree(), [-1.0, 0.0, 1.0]))) == 3
    assert len(list(enumerate_adapted_grid(uniform_tree(2, 2), [0.0, 1.0]))) == 8
    with pytest.raises(InvalidGrid):
        list(enumerate_adapted_grid(binomial_tree(), np.zeros((0, 1))))
    with pytest.raises(BudgetExceeded):
        list(enumerate_adapted_grid(uniform_tree(2, 2), [0.0, 1.0], budget=7))


def test_enumerate_distinct():
    tree = uniform_tree(2, 2)
    seen = {tuple(s.values.reshape(-1)) for s in enumerate_adapted_grid(tree, [-1.0, 0.0, 1.0])}
    assert len(seen) == 27


def test_ft_sets():
    tree = binomial_tree()
    assert [a.tolist() for a in ft_sets(tree, 0)] == [[0, 1]]
    assert [a.tolist() for a in ft_sets(tree, 1)] == [[0], [1]]
    atoms = ft_sets(trinomial(2), 1)
    assert len(atoms) == 3 and all(a.size == 3 for a in atoms)
    with pytest.raises(ValueError):
        ft_sets(tree, 2)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), T=st.integers(1, 3))
def test_random_tree_invariants(seed, T):
    tree = random_tree(np.random.default_rng(seed), T)
    assert np.all(tree.leaf_prob > 0)
    assert abs(tree.leaf_prob.sum() - 1.0) < 1e-10
    for t in range(T + 1):
        atoms = ft_sets(tree, t)
        flat = np.sort(np.concatenate(atoms))
        np.testing.assert_array_equal(flat, np.arange(tree.n_leaves))
        if t < T:
            finer = ft_sets(tree, t + 1)
            for a in finer:
                assert any(set(a.tolist()) <= set(b.tolist()) for b in atoms)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_path_restriction_locality(seed):
    rng = np.random.default_rng(seed)
    tree = random_tree(rng, 3)
    a = rng.standard_normal((tree.n_decision, 2))
    leaf = int(rng.integers(tree.n_leaves))
    b = rng.standard_normal((tree.n_decision, 2))
    on_path = tree.leaf_dec_paths[leaf]
    b[on_path] = a[on_path]
    sa, sb = AdaptedStrategy(tree, a), AdaptedStrategy(tree, b)
    np.testing.assert_array_equal(restrict_to_path(sa, tree.leaf_ids[leaf]), restrict_to_path(sb, tree.leaf_ids[leaf]))
