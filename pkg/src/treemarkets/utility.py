"""Expected utility maximisation over grid strategies.

The objective is ``E[U(V(theta))]`` with ``U`` nondecreasing and possibly
non-concave.  For additive models an exact backward recursion runs over
reachable ``(node, theta_prev, wealth)`` states; wealth is carried exactly
and leaf terms are summed subtree by subtree in the same order as
:meth:`ScenarioTree.expectation`, so the recursion reproduces enumeration
bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AllInfeasible, BudgetExceeded
from .superhedging import strategy_grid
from .tree import AdaptedStrategy, _node_grids, grid_count, iter_adapted_grid_batches


class UtilityIntegrand:
    """``U(omega, w)``, nondecreasing in ``w``.

    ``func(leaves, w)`` works on arrays of leaf positions and wealth.  A
    wealth of ``-inf`` always maps to ``-inf`` so that strategies with a
    ``-inf`` outcome are never optimal.
    """

    def __init__(self, func, name: str = "utility"):
        self.func = func
        self.name = name

    def evaluate(self, leaves, w) -> np.ndarray:
        leaves = np.asarray(leaves)
        w = np.asarray(w, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            out = np.asarray(self.func(leaves, w), dtype=float)
        return np.where(w == -np.inf, -np.inf, out)

    def __call__(self, leaf, w):
        return self.evaluate(np.full(np.shape(w), leaf), w)

    def on_leaves(self, V) -> np.ndarray:
        """Apply to an array whose last axis runs over leaves."""
        V = np.asarray(V, dtype=float)
        leaves = np.broadcast_to(np.arange(V.shape[-1]), V.shape)
        return self.evaluate(leaves, V)


def linear_utility() -> UtilityIntegrand:
    return UtilityIntegrand(lambda leaves, w: w, "linear")


def exponential_utility(a: float = 1.0) -> UtilityIntegrand:
    """``-exp(-a w)``."""
    if a <= 0:
        raise ValueError("risk aversion must be positive")
    return UtilityIntegrand(lambda leaves, w: -np.exp(-a * w), f"exp:{a:g}")


def log_utility() -> UtilityIntegrand:
    """``log(1 + w)`` for ``w >= 0`` and ``-inf`` below."""

    def u(leaves, w):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(w >= 0, np.log1p(np.maximum(w, 0.0)), -np.inf)

    return UtilityIntegrand(u, "log")


def digital_utility(k: float = 1.0) -> UtilityIntegrand:
    """``1{w >= k}``: piecewise constant and not concave."""
    return UtilityIntegrand(lambda leaves, w: (w >= k).astype(float), f"digital:{k:g}")


def parse_utility(spec: str) -> UtilityIntegrand:
    """``linear``, ``exp:a``, ``log`` or ``digital:k``."""
    name, _, arg = spec.partition(":")
    if name == "linear":
        return linear_utility()
    if name == "exp":
        return exponential_utility(float(arg) if arg else 1.0)
    if name == "log":
        return log_utility()
    if name == "digital":
        return digital_utility(float(arg) if arg else 1.0)
    raise ValueError(f"unknown utility {spec!r}")


@dataclass
class UtilityAxiomReport:
    passed: bool
    violations: list


def check_utility_axioms(U: UtilityIntegrand, tree, grid) -> UtilityAxiomReport:
    """Monotonicity of ``U(omega, .)`` on a sorted wealth grid at every leaf."""
    w = np.sort(np.asarray(grid, dtype=float).reshape(-1))
    viol = []
    for k, leaf_id in enumerate(tree.leaf_ids):
        u = U.evaluate(np.full(w.size, k), w)
        for i in np.flatnonzero(u[:-1] > u[1:]):
            viol.append((leaf_id, float(w[i]), float(w[i + 1]), float(u[i]), float(u[i + 1])))
    return UtilityAxiomReport(not viol, viol)


@dataclass
class UtilityResult:
    value: float
    witness: AdaptedStrategy
    metadata: dict = field(default_factory=dict)


def brute_force_value(model, U: UtilityIntegrand, box=1.0, grid=11, budget: int = 10**5) -> UtilityResult:
    """Exact maximum of ``E[U(V)]`` by enumerating every grid strategy."""
    tree = model.tree
    G = strategy_grid(model, box, grid)
    best, best_vals = -np.inf, None
    for block in iter_adapted_grid_batches(tree, G, budget):
        obj = tree.expectation(U.on_leaves(model.hat(block)))
        k = int(np.argmax(obj))
        if best_vals is None or obj[k] > best:
            best, best_vals = float(obj[k]), block[k].copy()
    if best == -np.inf:
        raise AllInfeasible("every grid strategy has expected utility -inf")
    return UtilityResult(best, AdaptedStrategy(tree, best_vals), {"method": "enumerate", "strategies": grid_count(tree, G)})


class _UtilityDP:
    def __init__(self, model, U, grids, budget):
        self.model = model
        self.tree = model.tree
        self.U = U
        self.grids = grids
        self.budget = budget
        self.memo = {}
        self.leaf_prob = self.tree.leaf_prob

    def value(self, node: int, p_idx: int, w: float):
        key = (node, p_idx, w)
        hit = self.memo.get(key)
        if hit is not None:
            return hit[0]
        tree = self.tree
        if len(self.memo) > self.budget:
            raise BudgetExceeded(f"utility recursion exceeded {self.budget} states")
        t = tree.time[node]
        G = self.grids[tree.dec_index[node]]
        m = G.shape[0]
        xp = np.zeros((m, self.model.d)) if node == 0 else np.repeat(
            self.grids[tree.dec_index[tree.parent[node]]][p_idx][None], m, axis=0)
        nodes = np.full(m, node)
        total = 0.0
        for c in tree.children[node]:
            s = self.model.step(t, nodes, np.full(m, c), xp, G)
            wc = w + s
            if tree.leaf_pos[c] >= 0:
                pos = tree.leaf_pos[c]
                term = self.U.evaluate(np.full(m, pos), wc) * self.leaf_prob[pos]
            else:
                term = np.array([self.value(c, i, float(wc[i])) for i in range(m)])
            total = total + term
        k = int(np.argmax(total))
        self.memo[key] = (float(total[k]), k)
        return float(total[k])

    def witness(self) -> AdaptedStrategy:
        tree = self.tree
        values = np.zeros((tree.n_decision, self.model.d))
        state = {0: (0, 0.0)}
        for node in tree.decision_nodes:
            p_idx, w = state[node]
            k = self.memo[(node, p_idx, w)][1]
            G = self.grids[tree.dec_index[node]]
            values[tree.dec_index[node]] = G[k]
            xp = np.zeros((1, self.model.d)) if node == 0 else self.grids[tree.dec_index[tree.parent[node]]][p_idx][None]
            for c in tree.children[node]:
                s = self.model.step(tree.time[node], np.array([node]), np.array([c]), xp, G[k][None])
                state[c] = (k, float(w + s[0]))
        return AdaptedStrategy(tree, values)


def maximize_utility(model, U: UtilityIntegrand, box=1.0, grid=11, budget: int = 10**6, method: str = "auto") -> UtilityResult:
    """Maximise ``sum_omega P(omega) U(omega, V(omega, theta))`` over grid strategies in the box.

    ``method`` is ``"dp"`` (additive models), ``"enumerate"`` or ``"auto"``.
    Raises :class:`AllInfeasible` when the objective is ``-inf`` everywhere.
    """
    use_dp = method == "dp" or (method == "auto" and getattr(model, "additive", False))
    if not use_dp:
        res = brute_force_value(model, U, box, grid, budget)
        return res
    G = strategy_grid(model, box, grid)
    dp = _UtilityDP(model, U, _node_grids(model.tree, G), budget)
    value = dp.value(0, 0, 0.0)
    if value == -np.inf:
        raise AllInfeasible("every grid strategy has expected utility -inf")
    return UtilityResult(value, dp.witness(), {"method": "dp", "states": len(dp.memo)})
