"""Expected utility with transaction fees on a two-period tree.

Compares the exact backward recursion with brute-force enumeration for
several utilities, including a non-concave digital one, and shows how a
large fee shuts down trading.
"""

import time

from treemarkets import additive_costs, brute_force_value, maximize_utility, parse_utility, uniform_tree
from treemarkets.models import FixedCost, ProportionalCost

tree = uniform_tree(2, 2, [0.5, 0.5])
prices = {"o": 1.0, "o0": 1.5, "o1": 0.75, "o00": 2.0, "o01": 1.25, "o10": 1.0, "o11": 0.5}

for fee in (0.0, 0.02, 10.0):
    market = additive_costs(tree, prices, [ProportionalCost(0.01), FixedCost(fee)])
    for spec in ("linear", "exp:2", "log", "digital:0.25"):
        U = parse_utility(spec)
        t0 = time.perf_counter()
        dp = maximize_utility(market, U, box=1.0, grid=9)
        t1 = time.perf_counter()
        brute = brute_force_value(market, U, box=1.0, grid=9)
        t2 = time.perf_counter()
        print(f"fee {fee:5.2f} {spec:13s} value {dp.value: .6f} (enumeration {brute.value: .6f}) "
              f"root position {dp.witness.values[0, 0]: .2f}  dp {1e3 * (t1 - t0):.1f} ms, "
              f"enumeration {1e3 * (t2 - t1):.1f} ms")
