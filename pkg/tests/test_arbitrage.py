import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from treemarkets import additive_costs, build_tree, frictionless, limit_order_book, random_tree, two_state_model, \
    uniform_tree
from treemarkets.arbitrage import ARBITRAGE, NA_CERTIFIED, NA_UP_TO_SEARCH, SphereConfig, check_na, \
    domination_check, frictionless_dominator, homogeneous_margin, martingale_weights, na_check_homogeneous, \
    na_check_linear, viability_probe
from treemarkets.errors import NotLinear
from treemarkets.models import FunctionModel, ProportionalCost
from treemarkets.recession import recession_analytic

from conftest import BINOMIAL_PRICES, binomial_tree, martingale_prices, random_prices


def monotone():
    return frictionless(binomial_tree(), {"o": 1.0, "u": 2.0, "d": 1.5})


def duplicated():
    return frictionless(binomial_tree(), {"o": [1.0, 1.0], "u": [2.0, 2.0], "d": [0.5, 0.5]})


def zero_model():
    tree = binomial_tree()
    zero = lambda leaves, X: np.zeros(np.shape(X)[0])
    return FunctionModel(tree, 1, zero, positively_homogeneous=True, recession=zero, name="zero")


def test_binomial_certified(binomial_model):
    v = na_check_linear(binomial_model)
    assert v.status == NA_CERTIFIED
    w = v.certificate["o"]["weights"]
    np.testing.assert_allclose(w, [1 / 3, 2 / 3], rtol=0, atol=1e-9)


def test_monotone_arbitrage():
    v = check_na(monotone())
    assert v.status == ARBITRAGE
    assert v.witness.values[0, 0] == 1.0
    assert v.margin == 0.5


def test_redundancy_witness():
    v = check_na(duplicated())
    assert v.status == ARBITRAGE
    assert v.metadata["kind"] == "redundancy"
    np.testing.assert_array_equal(v.witness.values[0], [1.0, -1.0])
    np.testing.assert_array_equal(duplicated().everywhere(v.witness.paths()[:1]), [[0.0, 0.0]])


def test_two_state():
    v = check_na(two_state_model())
    assert v.status == NA_UP_TO_SEARCH
    assert v.margin < 0
    np.testing.assert_allclose(v.margin, -1.0, atol=1e-9)
    assert v.certificate is not None
    with pytest.raises(NotLinear):
        na_check_linear(two_state_model())


def test_lob_margin():
    tree = uniform_tree(2, 2)
    lob = limit_order_book(tree, {n: 1.0 for n in tree.ids}, 0.2, 1.0)
    v = check_na(lob)
    assert v.status == NA_UP_TO_SEARCH and v.margin == -np.inf


def test_homogeneous_finds_monotone():
    v = na_check_homogeneous(monotone())
    assert v.status == ARBITRAGE and v.margin >= 0


def test_viability():
    assert viability_probe(frictionless(binomial_tree(), BINOMIAL_PRICES), -1.0).flag == "BOUNDED"
    assert viability_probe(monotone(), -1.0).flag == "UNBOUNDED_SUSPECT"
    assert viability_probe(zero_model(), 0.0).flag == "BOUNDED"
    assert check_na(zero_model()).is_arbitrage


def test_domination_and_dominator(binomial_model):
    grid = np.linspace(-2, 2, 41)[:, None]
    prop = additive_costs(binomial_model.tree, BINOMIAL_PRICES, [ProportionalCost(0.1)])
    assert domination_check(prop, binomial_model, grid).dominated
    assert domination_check(binomial_model, binomial_model, grid).dominated
    assert not domination_check(binomial_model, prop, grid).dominated
    rep = frictionless_dominator(two_state_model(), grid)
    assert not rep.linear_dominator_exists and not rep.na_dominator_exists
    rep = frictionless_dominator(binomial_model, grid)
    assert rep.na_dominator_exists
    np.testing.assert_allclose(rep.min_weight, 1 / 3, atol=1e-9)


def test_martingale_weights_oracle():
    D = np.array([[1.0], [-0.5]])
    w, s = martingale_weights(D)
    np.testing.assert_allclose(w, [1 / 3, 2 / 3], atol=1e-12)
    w, s = martingale_weights(np.array([[1.0], [0.5]]))
    assert w is None or s <= 1e-12


def _instance(seed):
    rng = np.random.default_rng(seed)
    T = int(rng.integers(1, 4))
    d = int(rng.integers(1, 3))
    if T == 3 and d == 2:
        T = 2
    tree = random_tree(rng, T, max_branching=d + 2, min_branching=d + 1)
    S = martingale_prices(rng, tree, d) if rng.random() < 0.6 else random_prices(rng, tree, d)
    return frictionless(tree, S)


@pytest.mark.parametrize("seed", range(12))
def test_linear_and_search_agree(seed):
    model = _instance(seed)
    lin = na_check_linear(model)
    hom = na_check_homogeneous(model)
    assert lin.is_arbitrage == hom.is_arbitrage
    if not lin.is_arbitrage:
        assert hom.margin < 0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_certificate_soundness(seed):
    model = _instance(seed)
    v = na_check_linear(model)
    tree = model.tree
    S = model.prices if hasattr(model, "prices") else None
    if v.status == NA_CERTIFIED:
        for nid, cert in v.certificate.items():
            node = tree.index(nid)
            w = np.asarray(cert["weights"])
            assert np.all(w > 0) and abs(w.sum() - 1) < 1e-9
            kids = list(tree.children[node])
            inc = S[kids] - S[node]
            assert np.all(np.abs(w @ inc) < 1e-9)
    elif v.status == ARBITRAGE:
        vals = recession_analytic(model).hat(v.witness)
        assert np.any(v.witness.values != 0)
        assert np.all(vals >= -1e-9)


@settings(max_examples=10, deadline=None)
@given(lam=st.floats(0.01, 100.0))
def test_search_scale_invariance(lam):
    for m in (monotone(), two_state_model()):
        v = na_check_homogeneous(m)
        rec = recession_analytic(m)
        if v.witness is not None:
            base = homogeneous_margin(rec, v.witness.values[None])[0]
            scaled = homogeneous_margin(rec, lam * v.witness.values[None])[0]
            np.testing.assert_allclose(scaled, base, atol=1e-12)
        scaled_model = FunctionModel(m.tree, 1, lambda leaves, X, m=m: m.evaluate(leaves, lam * np.asarray(X)),
                                     positively_homogeneous=True)
        assert na_check_homogeneous(scaled_model).status == v.status


def test_search_config_determinism():
    cfg = SphereConfig(seed=7)
    a = na_check_homogeneous(two_state_model(), cfg)
    b = na_check_homogeneous(two_state_model(), cfg)
    assert a.margin == b.margin
