"""Market integrands ``V(omega, x)`` and the built-in example markets.

An integrand maps a leaf and a path vector ``x = (x_0, ..., x_{T-1})`` in
``R^{dT}`` to an extended real (``-inf`` marks an infeasible position).  The
strategy functional is recovered leafwise, ``V_hat(theta)(omega) =
V(omega, theta(omega))``, which is what :meth:`MarketIntegrand.hat` does.

Leaves are addressed by their position in ``tree.leaves`` (0 .. n_leaves-1)
in every vectorised method; ``__call__`` also accepts node ids.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, NegativeOrderNotAllowed, NoAnalyticForm
from .tree import AdaptedStrategy, ScenarioTree, build_tree

NEG_INF = -np.inf


def dot_last(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Inner product over the last axis, summed in a fixed left-to-right order."""
    out = a[..., 0] * b[..., 0]
    for i in range(1, a.shape[-1]):
        out = out + a[..., i] * b[..., i]
    return out


def _leaf_positions(tree: ScenarioTree, leaf) -> int:
    if isinstance(leaf, str):
        pos = tree.leaf_pos[tree.index(leaf)]
        if pos < 0:
            raise KeyError(f"{leaf!r} is not a leaf")
        return int(pos)
    return int(leaf)


def _as_strategy_block(tree: ScenarioTree, strategy, d: int) -> tuple[np.ndarray, bool]:
    if isinstance(strategy, AdaptedStrategy):
        values = strategy.values[None]
        single = True
    else:
        values = np.asarray(strategy, dtype=float)
        single = values.ndim == 2
        if single:
            values = values[None]
    if values.shape[1:] != (tree.n_decision, d):
        raise DimensionMismatch(
            f"strategy shape {values.shape[1:]} does not match ({tree.n_decision}, {d})"
        )
    return values, single


class MarketIntegrand:
    """Scalar integrand on a scenario tree.

    Subclasses implement :meth:`evaluate`; everything else derives from it.
    """

    positively_homogeneous = False
    additive = False
    has_analytic_recession = False
    usc = True
    name = "integrand"

    def __init__(self, tree: ScenarioTree, d: int):
        self.tree = tree
        self.d = int(d)
        self.T = tree.T

    @property
    def dim(self) -> int:
        return self.d * self.T

    def evaluate(self, leaves: np.ndarray, X: np.ndarray) -> np.ndarray:
        """Row-wise values: ``out[k] = V(leaves[k], X[k])``."""
        raise NotImplementedError

    def _check_x(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.dim:
            raise DimensionMismatch(f"path vectors must have length {self.dim}, got {X.shape[-1]}")
        return X

    def __call__(self, leaf, x):
        x = self._check_x(x)
        pos = _leaf_positions(self.tree, leaf)
        return self.evaluate(np.array([pos]), x.reshape(1, -1))[0]

    def at_leaf(self, leaf, X) -> np.ndarray:
        """Values at one leaf for a stack of path vectors ``(m, dT)``."""
        X = self._check_x(X).reshape(-1, self.dim)
        pos = _leaf_positions(self.tree, leaf)
        return self.evaluate(np.full(X.shape[0], pos), X)

    def on_paths(self, X) -> np.ndarray:
        """``X`` has shape ``(..., n_leaves, dT)``; every leaf gets its own row."""
        X = self._check_x(X)
        L = self.tree.n_leaves
        flat = X.reshape(-1, L, self.dim)
        leaves = np.tile(np.arange(L), flat.shape[0])
        out = self.evaluate(leaves, flat.reshape(-1, self.dim))
        return out.reshape(X.shape[:-1] + out.shape[1:])

    def everywhere(self, X) -> np.ndarray:
        """Every path vector in ``X`` (shape ``(m, dT)``) at every leaf -> ``(m, n_leaves, ...)``."""
        X = self._check_x(X).reshape(-1, self.dim)
        L = self.tree.n_leaves
        tiled = np.broadcast_to(X[:, None, :], (X.shape[0], L, self.dim))
        return self.on_paths(tiled)

    def hat(self, strategy) -> np.ndarray:
        """Leafwise outcome of an adapted strategy (or a stack of them)."""
        values, single = _as_strategy_block(self.tree, strategy, self.d)
        X = values[:, self.tree.leaf_dec_paths, :].reshape(values.shape[0], self.tree.n_leaves, -1)
        out = self.on_paths(X)
        return out[0] if single else out

    def _recession_evaluate(self, leaves, X):
        raise NoAnalyticForm(f"{self.name} has no analytic recession model")

    def na_certificate(self):
        """Closed-form no-arbitrage argument, when the model admits one."""
        return None


class VectorIntegrand(MarketIntegrand):
    """Integrand with values in ``R^n``; an infeasible point is the all ``-inf`` vector."""

    def __init__(self, tree: ScenarioTree, d: int, n: int):
        super().__init__(tree, d)
        self.n = int(n)


# ---------------------------------------------------------------------------
# transaction costs for the additive model


class CostFunction:
    """Per-step charge ``g_t``; ``steps`` restricts the times it applies to."""

    kind = "cost"
    homogeneous = False
    on_position = False

    def __init__(self, steps=None):
        self.steps = None if steps is None else frozenset(int(s) for s in steps)

    def applies(self, t: int) -> bool:
        return self.steps is None or t in self.steps

    def bind(self, tree: ScenarioTree, d: int) -> "CostFunction":
        return self

    def charge(self, nodes: np.ndarray, dx: np.ndarray, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def recession_charge(self, nodes, dx, x) -> np.ndarray:
        """Charge of the recession model, i.e. ``-(-g)^inf``."""
        raise NotImplementedError


class ProportionalCost(CostFunction):
    """``g(dx) = rate * |dx|_1``; ``rate`` is a scalar or a per-node mapping."""

    kind = "proportional"
    homogeneous = True

    def __init__(self, rate, steps=None):
        super().__init__(steps)
        self.rate = rate
        self._node_rate = None

    def bind(self, tree, d):
        bound = ProportionalCost(self.rate, self.steps)
        if np.isscalar(self.rate):
            bound._node_rate = np.full(tree.n_nodes, float(self.rate))
        else:
            bound._node_rate = tree.node_array(self.rate)
        if np.any(bound._node_rate < 0):
            raise ValueError("proportional cost rates must be nonnegative")
        return bound

    def charge(self, nodes, dx, x):
        return self._node_rate[nodes] * np.abs(dx).sum(axis=-1)

    recession_charge = charge


class FixedCost(CostFunction):
    """Flat ``fee`` whenever the position changes."""

    kind = "fixed"

    def __init__(self, fee: float, steps=None):
        super().__init__(steps)
        if fee < 0:
            raise ValueError("fee must be nonnegative")
        self.fee = float(fee)

    def charge(self, nodes, dx, x):
        return np.where(np.any(dx != 0, axis=-1), self.fee, 0.0)

    def recession_charge(self, nodes, dx, x):
        return np.zeros(dx.shape[:-1])


class BoxConstraint(CostFunction):
    """Position constraint ``x_t in D_t`` with ``D_t`` a finite union of closed boxes.

    ``boxes`` is a list of ``(lower, upper)`` pairs of length-``d`` vectors
    (scalars are broadcast); use ``+-inf`` for unbounded sides.
    """

    kind = "constraint"
    on_position = True

    def __init__(self, boxes, steps=None):
        super().__init__(steps)
        self.boxes = [(np.atleast_1d(np.asarray(lo, float)), np.atleast_1d(np.asarray(hi, float))) for lo, hi in boxes]
        if not self.boxes:
            raise ValueError("constraint needs at least one box")
        for lo, hi in self.boxes:
            if np.any(lo > hi):
                raise ValueError("box with lower > upper")

    def contains(self, x: np.ndarray) -> np.ndarray:
        inside = np.zeros(x.shape[:-1], dtype=bool)
        for lo, hi in self.boxes:
            inside |= np.all((x >= lo) & (x <= hi), axis=-1)
        return inside

    def recession_cone_contains(self, x: np.ndarray) -> np.ndarray:
        """Union of the boxes' recession cones, coordinate by coordinate."""
        inside = np.zeros(x.shape[:-1], dtype=bool)
        for lo, hi in self.boxes:
            ok_lo = np.where(np.isfinite(lo), x >= 0, True)
            ok_hi = np.where(np.isfinite(hi), x <= 0, True)
            inside |= np.all(ok_lo & ok_hi, axis=-1)
        return inside

    def charge(self, nodes, dx, x):
        return np.where(self.contains(x), 0.0, np.inf)

    def recession_charge(self, nodes, dx, x):
        return np.where(self.recession_cone_contains(x), 0.0, np.inf)


# ---------------------------------------------------------------------------
# built-in scalar models


class AdditiveModel(MarketIntegrand):
    """``V = sum_t [<x_t, S_{t+1} - S_t> - g_t(x_t - x_{t-1})]`` with ``x_{-1} = 0``.

    With no costs this is the frictionless market.
    """

    additive = True
    has_analytic_recession = True

    def __init__(self, tree: ScenarioTree, prices, costs=(), d: int | None = None):
        S = _price_array(tree, prices, d)
        super().__init__(tree, S.shape[1])
        self.prices = S
        inc = np.zeros_like(S)
        inc[1:] = S[1:] - S[tree.parent[1:]]
        self.increments = inc
        if isinstance(costs, CostFunction):
            costs = [costs]
        self.costs = [c.bind(tree, self.d) for c in costs]
        self.positively_homogeneous = all(c.homogeneous for c in self.costs)
        self.name = "frictionless" if not self.costs else "additive"

    def costs_at(self, t: int) -> list:
        return [c for c in self.costs if c.applies(t)]

    def step(self, t, nodes, children, x_prev, x, recession=False) -> np.ndarray:
        """Gain of step ``t`` on each row; shared by evaluation and the solvers."""
        gain = dot_last(x, self.increments[children])
        dx = x - x_prev
        for c in self.costs_at(t):
            charge = c.recession_charge(nodes, dx, x) if recession else c.charge(nodes, dx, x)
            gain = gain - charge
        return gain

    def _run(self, leaves, X, recession=False):
        X = X.reshape(X.shape[0], self.T, self.d)
        paths = self.tree.leaf_paths[leaves]
        total = np.zeros(X.shape[0])
        prev = np.zeros((X.shape[0], self.d))
        for t in range(self.T):
            total = total + self.step(t, paths[:, t], paths[:, t + 1], prev, X[:, t], recession)
            prev = X[:, t]
        return total

    def evaluate(self, leaves, X):
        return self._run(np.asarray(leaves), np.asarray(X, dtype=float))

    def _recession_evaluate(self, leaves, X):
        return self._run(np.asarray(leaves), np.asarray(X, dtype=float), recession=True)

    def frictionless_part(self) -> "AdditiveModel":
        return AdditiveModel(self.tree, self.prices)


def _price_array(tree: ScenarioTree, prices, d: int | None) -> np.ndarray:
    if isinstance(prices, np.ndarray) and prices.shape[0] == tree.n_nodes:
        S = np.asarray(prices, dtype=float)
        S = S.reshape(tree.n_nodes, -1)
    else:
        if d is None:
            sample = next(iter(prices.values())) if isinstance(prices, dict) else prices[0]
            d = int(np.size(sample))
        S = tree.node_array(prices, d)
    if d is not None and S.shape[1] != d:
        raise DimensionMismatch(f"prices have dimension {S.shape[1]}, expected {d}")
    if not np.all(np.isfinite(S)):
        raise ValueError("prices must be finite")
    return S


def frictionless(tree: ScenarioTree, prices, d: int | None = None) -> AdditiveModel:
    """``V(omega, x) = sum_t <x_t, S_{t+1}(omega) - S_t(omega)>``."""
    return AdditiveModel(tree, prices, (), d)


def additive_costs(tree: ScenarioTree, prices, costs, d: int | None = None) -> AdditiveModel:
    """Frictionless gains minus per-step costs (proportional, fixed, or box constraints)."""
    return AdditiveModel(tree, prices, costs, d)


class LimitOrderBookModel(MarketIntegrand):
    """Price-impact market: impact state ``l`` decays by ``kappa`` and is pushed by trades.

    Starting from ``l_0 = 0`` and zero position, along each path::

        l_t = kappa * l_{t-1} + 2 m_t (x_t - x_{t-1})        (t >= 1)
        V  += x_t (S_{t+1} - S_t + kappa (l_t - l_{t-1})) - m_t (x_t - x_{t-1})^2
    """

    has_analytic_recession = True
    name = "lob"

    def __init__(self, tree: ScenarioTree, prices, kappa: float, depth):
        super().__init__(tree, 1)
        if not 0.0 < kappa < 1.0:
            raise ValueError("kappa must lie in (0, 1)")
        self.kappa = float(kappa)
        self.prices = tree.node_array(prices)
        self.depth = np.full(tree.n_nodes, float(depth)) if np.isscalar(depth) else tree.node_array(depth)
        if np.any(self.depth <= 0):
            raise ValueError("depth m_t must be strictly positive")
        self._quad = None

    def _run(self, leaves, X, with_prices=True):
        X = np.asarray(X, dtype=float).reshape(-1, self.T)
        paths = self.tree.leaf_paths[np.asarray(leaves)]
        k = X.shape[0]
        value = np.zeros(k)
        prev_x = np.zeros(k)
        level = np.zeros(k)
        prev_level = np.zeros(k)
        for t in range(self.T):
            node, child = paths[:, t], paths[:, t + 1]
            m = self.depth[node]
            dx = X[:, t] - prev_x
            if t > 0:
                level = self.kappa * prev_level + 2.0 * m * dx
            dS = self.prices[child] - self.prices[node] if with_prices else 0.0
            value = value + X[:, t] * (dS + self.kappa * (level - prev_level)) - m * dx * dx
            prev_x, prev_level = X[:, t], level
        return value

    def evaluate(self, leaves, X):
        return self._run(leaves, X)

    def quadratic_forms(self) -> np.ndarray:
        """Per-leaf symmetric matrices ``A`` with ``V - <x, dS> = x' A x``."""
        if self._quad is None:
            L, n = self.tree.n_leaves, self.T
            E = np.eye(n)
            leaves = np.arange(L)
            diag = np.stack([self._run(leaves, np.tile(E[i], (L, 1)), False) for i in range(n)], axis=1)
            A = np.zeros((L, n, n))
            for i in range(n):
                A[:, i, i] = diag[:, i]
                for j in range(i + 1, n):
                    both = self._run(leaves, np.tile(E[i] + E[j], (L, 1)), False)
                    A[:, i, j] = A[:, j, i] = 0.5 * (both - diag[:, i] - diag[:, j])
            self._quad = A
        return self._quad

    def _recession_evaluate(self, leaves, X):
        leaves = np.asarray(leaves)
        X = np.asarray(X, dtype=float).reshape(-1, self.T)
        A = self.quadratic_forms()[leaves]
        paths = self.tree.leaf_paths[leaves]
        dS = self.prices[paths[:, 1:]] - self.prices[paths[:, :-1]]
        linear = (X * dS).sum(axis=1)
        Ax = np.einsum("kij,kj->ki", A, X)
        quad = (X * Ax).sum(axis=1)
        scale = np.abs(A).max(axis=(1, 2))
        tol = 1e-12 * np.maximum(scale, 1.0)
        nsd = np.linalg.eigvalsh(A).max(axis=1) <= tol
        xnorm = np.maximum(np.abs(X).max(axis=1), 1.0)
        in_kernel = np.abs(Ax).max(axis=1) <= tol * xnorm
        out = np.where(in_kernel, linear, NEG_INF)
        # indefinite impact: every direction with nonnegative curvature blows up
        out = np.where(nsd, out, np.where(quad < -tol * xnorm**2, NEG_INF, np.inf))
        return out


def limit_order_book(tree: ScenarioTree, prices, kappa: float, depth) -> LimitOrderBookModel:
    return LimitOrderBookModel(tree, prices, kappa, depth)


class ConsumptionModel(MarketIntegrand):
    """Utility of consumption subject to terminal solvency.

    Each step chooses ``(theta_t, c_{t+1})``: a position and the consumption
    paid at the next date.  ``V = U(c)`` when ``c >= 0`` and
    ``V_0 + sum_t [<theta_t, dS_{t+1}> - c_{t+1}] >= 0``; otherwise ``-inf``.
    """

    name = "consumption"

    def __init__(self, tree: ScenarioTree, prices, utility: Callable, initial_wealth: float, weights=None):
        S = _price_array(tree, prices, None)
        super().__init__(tree, S.shape[1] + 1)
        self.assets = S.shape[1]
        self.prices = S
        inc = np.zeros_like(S)
        inc[1:] = S[1:] - S[tree.parent[1:]]
        self.increments = inc
        self.utility = utility
        self.initial_wealth = float(initial_wealth)
        if self.initial_wealth <= 0:
            raise ValueError("initial wealth must be positive")
        self.weights = None if weights is None else np.asarray(weights, dtype=float)
        self.has_analytic_recession = self.weights is not None
        u0 = float(np.asarray(utility(np.zeros((1, tree.T))))[0])
        if u0 != 0.0:
            raise ValueError("utility of zero consumption must be 0")

    def _split(self, leaves, X):
        X = np.asarray(X, dtype=float).reshape(-1, self.T, self.d)
        paths = self.tree.leaf_paths[np.asarray(leaves)]
        gains = np.zeros(X.shape[0])
        for t in range(self.T):
            gains = gains + dot_last(X[:, t, : self.assets], self.increments[paths[:, t + 1]])
        c = X[:, :, self.assets]
        return gains, c

    def evaluate(self, leaves, X):
        gains, c = self._split(leaves, X)
        ok = (c >= 0).all(axis=1) & (self.initial_wealth + gains - c.sum(axis=1) >= 0)
        u = np.asarray(self.utility(c), dtype=float)
        return np.where(ok, u, NEG_INF)

    def _recession_evaluate(self, leaves, X):
        if self.weights is None:
            raise NoAnalyticForm("consumption recession needs a linear utility")
        gains, c = self._split(leaves, X)
        ok = (c >= 0).all(axis=1) & (gains - c.sum(axis=1) >= 0)
        return np.where(ok, c @ self.weights, NEG_INF)


def linear_consumption_utility(weights) -> Callable:
    w = np.asarray(weights, dtype=float)
    return lambda c: np.asarray(c, dtype=float) @ w


def consumption_model(tree, prices, utility=None, initial_wealth: float = 1.0, weights=None) -> ConsumptionModel:
    """Consumption market; pass ``weights`` for the linear utility ``sum_t w_t c_t``."""
    if utility is None:
        if weights is None:
            weights = np.ones(tree.T)
        utility = linear_consumption_utility(weights)
    return ConsumptionModel(tree, prices, utility, initial_wealth, weights)


class TwoStateModel(MarketIntegrand):
    """``V(w1, x) = |x|`` and ``V(w2, x) = -|x|`` on a one-step, two-leaf tree."""

    positively_homogeneous = True
    has_analytic_recession = True
    name = "two_state"

    def __init__(self, p: float = 0.5):
        tree = build_tree(
            [
                {"id": "o", "time": 0, "parent": None},
                {"id": "w1", "time": 1, "parent": "o", "prob": p},
                {"id": "w2", "time": 1, "parent": "o", "prob": 1.0 - p},
            ]
        )
        super().__init__(tree, 1)
        self.sign = np.array([1.0, -1.0])

    def evaluate(self, leaves, X):
        X = np.asarray(X, dtype=float).reshape(-1)
        return self.sign[np.asarray(leaves)] * np.abs(X)

    _recession_evaluate = evaluate

    def na_certificate(self):
        return {
            "kind": "closed_form",
            "argument": "at leaf w2 the recession value is -|x| < 0 for every x != 0",
            "leaf": "w2",
        }


def two_state_model(p: float = 0.5) -> TwoStateModel:
    return TwoStateModel(p)


class FunctionModel(MarketIntegrand):
    """Wrap a vectorised ``func(leaves, X)``; used for custom and synthetic models."""

    def __init__(self, tree, d, func, positively_homogeneous=False, usc=True, recession=None, name="custom"):
        super().__init__(tree, d)
        self.func = func
        self.positively_homogeneous = positively_homogeneous
        self.usc = usc
        self.name = name
        self._recession = recession
        if recession is not None or positively_homogeneous:
            self.has_analytic_recession = True

    def evaluate(self, leaves, X):
        return np.asarray(self.func(np.asarray(leaves), np.asarray(X, dtype=float)), dtype=float)

    def _recession_evaluate(self, leaves, X):
        if self._recession is not None:
            return np.asarray(self._recession(np.asarray(leaves), np.asarray(X, dtype=float)), dtype=float)
        if self.positively_homogeneous:
            # usc and positively homogeneous: the model is its own recession
            return self.evaluate(leaves, X)
        raise NoAnalyticForm(self.name)


class StrategyFunctional:
    """Black-box ``V_hat`` acting on whole strategies (not necessarily leafwise).

    ``func`` maps a stack ``(m, n_decision, d)`` to ``(m, n_leaves)``.
    """

    def __init__(self, tree: ScenarioTree, d: int, func, name="functional"):
        self.tree = tree
        self.d = d
        self.T = tree.T
        self.func = func
        self.name = name

    @property
    def dim(self):
        return self.d * self.T

    def hat(self, strategy):
        values, single = _as_strategy_block(self.tree, strategy, self.d)
        out = np.asarray(self.func(values), dtype=float)
        return out[0] if single else out


def evaluate_hat(model, strategy) -> np.ndarray:
    """``V_hat(theta)(omega) = V(omega, theta(omega))`` at every leaf."""
    return model.hat(strategy)


# ---------------------------------------------------------------------------
# multi-asset transfer market (vector valued)


class KabanovModel(VectorIntegrand):
    """Portfolio in ``d`` physical units changed by transfer orders.

    The order at time ``t`` is a zero-diagonal ``d x d`` matrix, flattened
    row-major over the off-diagonal slots ``(i, j)``.  A positive entry
    ``a`` in slot ``(i, j)`` buys ``a`` units of asset ``j`` and pays
    ``(1 + pi_ij) * a * S_j / S_i`` units of asset ``i``, with prices and
    cost rates read at the decision node.  A negative entry is the reverse
    transfer ``j -> i`` charged at ``pi_ji``.  ``V = sum_t F_{t+1}(theta_t)``.
    """

    positively_homogeneous = True
    has_analytic_recession = True
    name = "kabanov"

    def __init__(self, tree: ScenarioTree, prices, costs, allow_negative: bool = True):
        S = _price_array(tree, prices, None)
        n = S.shape[1]
        if n < 2:
            raise DimensionMismatch("transfer market needs at least two assets")
        super().__init__(tree, n * (n - 1), n)
        if np.any(S <= 0):
            raise ValueError("transfer prices must be strictly positive")
        self.prices = S
        pi = np.asarray(costs, dtype=float)
        if pi.ndim == 0:
            pi = np.full((n, n), float(pi))
        if pi.ndim == 2:
            pi = np.broadcast_to(pi, (tree.n_nodes, n, n))
        if pi.shape != (tree.n_nodes, n, n):
            raise DimensionMismatch("costs must be scalar, (d, d) or (n_nodes, d, d)")
        if np.any(pi < 0):
            raise ValueError("transfer costs must be nonnegative")
        self.costs = np.array(pi)
        self.allow_negative = allow_negative
        self.slots = [(i, j) for i in range(n) for j in range(n) if i != j]

    def transfer(self, nodes: np.ndarray, orders: np.ndarray) -> np.ndarray:
        """``F(order)`` at decision nodes, rows of shape ``(n(n-1),) -> (n,)``."""
        if not self.allow_negative and np.any(orders < 0):
            raise NegativeOrderNotAllowed("negative transfer orders are disabled for this market")
        S = self.prices[nodes]
        out = np.zeros(orders.shape[:-1] + (self.n,))
        for k, (i, j) in enumerate(self.slots):
            a = orders[..., k]
            buy = np.maximum(a, 0.0)
            sell = np.maximum(-a, 0.0)
            rate_ij = S[..., j] / S[..., i]
            out[..., j] += buy - (1.0 + self.costs[nodes, j, i]) * sell / rate_ij
            out[..., i] += sell - (1.0 + self.costs[nodes, i, j]) * buy * rate_ij
        return out

    def evaluate(self, leaves, X):
        X = np.asarray(X, dtype=float).reshape(-1, self.T, self.d)
        paths = self.tree.leaf_paths[np.asarray(leaves)]
        total = np.zeros((X.shape[0], self.n))
        for t in range(self.T):
            total = total + self.transfer(paths[:, t], X[:, t])
        return total

    _recession_evaluate = evaluate

    def order_matrix(self, flat) -> np.ndarray:
        m = np.zeros((self.n, self.n))
        for k, (i, j) in enumerate(self.slots):
            m[i, j] = flat[k]
        return m


def kabanov_model(tree: ScenarioTree, prices, costs, allow_negative: bool = True) -> KabanovModel:
    return KabanovModel(tree, prices, costs, allow_negative)
