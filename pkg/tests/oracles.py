"""Independent reference computations shared by the test modules."""

import itertools

import numpy as np
from scipy.optimize import linprog

from treemarkets import RandomCone, kabanov_model, path_tree


def kabanov_arbitrage_oracle(km, cone) -> bool:
    """Exact vector arbitrage test for a one-step transfer market.

    On each sign pattern of the order vector the transfer map is linear, so
    ``exists theta != 0 with V(theta) in K`` is one LP per pattern.
    """
    n, d = km.n, km.d
    node = np.array([0])
    plus = [km.transfer(node, np.eye(d)[k][None])[0] for k in range(d)]
    minus = [km.transfer(node, -np.eye(d)[k][None])[0] for k in range(d)]
    F = cone.facets(0)
    for sig in itertools.product([-1, 0, 1], repeat=d):
        idx = [k for k, s in enumerate(sig) if s]
        if not idx:
            continue
        A = np.array([plus[k] if sig[k] > 0 else minus[k] for k in idx]).T
        res = linprog(-np.ones(len(idx)), A_ub=-(F @ A) if F.size else None,
                      b_ub=np.zeros(F.shape[0]) if F.size else None, bounds=[(0, 1)] * len(idx), method="highs")
        if res.status == 0 and -res.fun > 1e-9:
            return True
    return False


def kabanov_instance(rng):
    n = int(rng.integers(2, 4))
    tree = path_tree(1)
    S = rng.uniform(0.5, 2.0, n)
    pi = rng.uniform(0.0, 0.2, (n, n)) * (rng.random() < 0.7)
    km = kabanov_model(tree, {"o": list(S), "o0": list(S)}, pi)
    G = np.vstack([np.eye(n), rng.normal(size=(int(rng.integers(0, 3)), n))])
    return km, RandomCone(G)


def random_cone(rng):
    n = int(rng.integers(1, 5))
    k = int(rng.integers(1, 6))
    G = rng.normal(size=(k, n))
    if rng.random() < 0.2:
        G = np.vstack([G, -G[:1]])
    return RandomCone(G)
