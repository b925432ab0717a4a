"""Two currencies with proportional exchange costs.

Positions are compared in the cone order of a solvency cone (here the
nonnegative orthant).  We check vector no-arbitrage with and without
costs, scalarise the vector model along a strictly positive price system,
and rebuild the vector model from three scalarisations.
"""

import numpy as np

from treemarkets import (castaing, gram_reconstruct, interior_ball_radius, kabanov_model, orthant, path_tree,
                         ri_selection, scalarize, vector_na_check)
from treemarkets.cones import ConeSelection, gram_residual

tree = path_tree(1)
K = orthant(2)
rates = {"o": [1.0, 1.0], "o0": [1.0, 1.0]}

for pi in (0.1, 0.0):
    market = kabanov_model(tree, rates, pi)
    v = vector_na_check(market, K)
    print(f"cost {pi:.1f}: {v.status}, margin {v.margin:.4f}")

market = kabanov_model(tree, rates, 0.1)
print("transfer 1 unit from asset 1 to asset 2:", market.everywhere([[1.0, 0.0]])[0, 0])
Z = ConeSelection([[0.5, 0.25]], "ri K°")
print("valued at Z = (1/2, 1/4):", scalarize(market, Z, K).everywhere([[1.0, 0.0]])[0, 0])

print("relative-interior point of K:", ri_selection(K).values[0])
print("ball radius at (1, 1):", interior_ball_radius(K, [1.0, 1.0])[0])

selections = [s for s in castaing(K) if s.target == "ri K°"][:3]
rebuilt = gram_reconstruct([(z, scalarize(market, z)) for z in selections], K)
grid = np.random.default_rng(0).uniform(-1, 1, (100, 2))
print("basis per leaf:", rebuilt.metadata()["basis"])
print(f"round-trip residual: {gram_residual(rebuilt, grid):.2e}")
