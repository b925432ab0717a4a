import numpy as np
import pytest

from treemarkets import build_tree, frictionless, uniform_tree


def binomial_tree(p=0.5):
    return build_tree([
        {"id": "o", "time": 0, "parent": None},
        {"id": "u", "time": 1, "parent": "o", "prob": p},
        {"id": "d", "time": 1, "parent": "o", "prob": 1 - p},
    ])


BINOMIAL_PRICES = {"o": 1.0, "u": 2.0, "d": 0.5}


@pytest.fixture
def binomial():
    return binomial_tree()


@pytest.fixture
def binomial_model(binomial):
    return frictionless(binomial, BINOMIAL_PRICES)


def random_prices(rng, tree, d=1, dyadic=True):
    """Random positive prices per node; dyadic values keep sums exact."""
    S = rng.integers(1, 17, size=(tree.n_nodes, d)) / 8.0 if dyadic else rng.uniform(0.5, 2.0, (tree.n_nodes, d))
    return {nid: (S[i] if d > 1 else float(S[i, 0])) for i, nid in enumerate(tree.ids)}


def trinomial(T=2):
    return uniform_tree(3, T, [0.25, 0.5, 0.25])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def martingale_prices(rng, tree, d=1):
    """Prices that are a martingale under random positive weights (so NA when increments span R^d)."""
    S = np.zeros((tree.n_nodes, d))
    S[0] = rng.uniform(1.0, 2.0, d)
    for node in range(tree.n_nodes):
        kids = list(tree.children[node])
        if not kids:
            continue
        w = rng.uniform(0.2, 1.0, len(kids))
        w /= w.sum()
        inc = rng.standard_normal((len(kids), d))
        inc -= w @ inc
        S[kids] = S[node] + inc
    return {nid: (S[i] if d > 1 else float(S[i, 0])) for i, nid in enumerate(tree.ids)}


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
