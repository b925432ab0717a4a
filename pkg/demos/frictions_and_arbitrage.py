"""Frictions, recession models and arbitrage.

For a few small markets we compare the model with its recession model
(its behaviour for very large positions) and run the arbitrage checks.
Fixed fees disappear at scale, price impact turns every large trade into
an infinite loss, and a market paying |x| in one state and -|x| in the
other is free of arbitrage without being dominated by any arbitrage-free
frictionless market.
"""

import numpy as np

from treemarkets import (additive_costs, build_tree, check_na, frictionless, frictionless_dominator,
                         limit_order_book, recession_analytic, recession_numeric, two_state_model, uniform_tree)
from treemarkets.models import FixedCost, ProportionalCost

tree = build_tree([
    {"id": "o", "time": 0, "parent": None},
    {"id": "u", "time": 1, "parent": "o", "prob": 0.5},
    {"id": "d", "time": 1, "parent": "o", "prob": 0.5},
])
prices = {"o": 1.0, "u": 2.0, "d": 0.5}

print("recession at z = 0.5, leaves (u, d)")
for label, model in [
    ("frictionless", frictionless(tree, prices)),
    ("proportional 5%", additive_costs(tree, prices, [ProportionalCost(0.05)])),
    ("fixed fee 0.1", additive_costs(tree, prices, [FixedCost(0.1)])),
]:
    exact = recession_analytic(model).everywhere([[0.5]])[0]
    est = recession_numeric(model, [0.5])
    print(f"  {label:16s} model {model.everywhere([[0.5]])[0]}  recession {exact}  numeric {est.value}")

book_tree = uniform_tree(2, 2)
book = limit_order_book(book_tree, {n: 1.0 + 0.1 * len(n) for n in book_tree.ids}, kappa=0.2, depth=1.0)
print("limit order book, recession at (1, 1):", recession_analytic(book).everywhere([[1.0, 1.0]])[0])
print("limit order book verdict:", check_na(book).status)

print()
monotone = frictionless(tree, {"o": 1.0, "u": 2.0, "d": 1.5})
v = check_na(monotone)
print(f"price rises surely: {v.status}, buy {v.witness.values[0, 0]}, worst gain {v.margin}")

twins = frictionless(tree, {"o": [1.0, 1.0], "u": [2.0, 2.0], "d": [0.5, 0.5]})
v = check_na(twins)
print(f"two copies of one asset: {v.status} ({v.metadata['kind']}), witness {v.witness.values[0]}")

two = two_state_model()
v = check_na(two)
print(f"|x| / -|x| market: {v.status}, worst normalised gain {v.margin:.3f}")
dom = frictionless_dominator(two, np.linspace(-3, 3, 61)[:, None])
print(f"  frictionless dominator exists: {dom.linear_dominator_exists}, "
      f"arbitrage-free dominator exists: {dom.na_dominator_exists}")
