"""Pricing a call in a one-period binomial market.

Builds the tree by hand, certifies absence of arbitrage, then computes the
superhedging price on finer and finer strategy grids.  The price converges
to 1/3 from above and the hedge ratio to 2/3.  A flat fee per trade is then
added to show how a non-convex friction moves the price.
"""

import numpy as np

from treemarkets import additive_costs, build_tree, check_na, frictionless, superhedge_price
from treemarkets.models import FixedCost

tree = build_tree([
    {"id": "o", "time": 0, "parent": None},
    {"id": "u", "time": 1, "parent": "o", "prob": 0.5},
    {"id": "d", "time": 1, "parent": "o", "prob": 0.5},
])
prices = {"o": 1.0, "u": 2.0, "d": 0.5}
call = np.array([1.0, 0.0])  # strike 1 on the leaves (u, d)

market = frictionless(tree, prices)
verdict = check_na(market)
print(f"no-arbitrage: {verdict.status}, martingale weights {verdict.certificate['o']['weights']}")

for grid in (11, 101, 401, 1201):
    res = superhedge_price(market, call, box=1.0, grid=grid)
    print(f"grid {grid:5d}: price {res.price:.6f} in [{res.price_lower:.6f}, {res.price:.6f}], "
          f"hedge {res.witness.values[0, 0]:.4f}")

# A fee of 0.1 on every nonzero position: hedging now costs the fee on top.
with_fee = additive_costs(tree, prices, [FixedCost(0.1)])
res = superhedge_price(with_fee, call, box=1.0, grid=2001)
print(f"with a 0.1 fee: price {res.price:.4f}, hedge {res.witness.values[0, 0]:.4f}")
