"""Superhedging: membership in the superhedgeable set and the price.

``rho(f) = min over grid strategies of max over leaves of (f - V(theta))``.
For additive models this is a backward recursion over ``(node, theta_prev)``:

    W(n, p) = min_theta max_children [W(c, theta) - step(n, c, p, theta)],

with ``W(leaf) = f(leaf)`` and ``rho = W(root, 0)``.  Other models are
enumerated.  Ties go to the lexicographically smallest grid point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyFeasibleSet, InfeasibleEverywhere
from .models import ProportionalCost
from .tree import AdaptedStrategy, _node_grids, axis_grid, iter_adapted_grid_batches

ROW_CHUNK = 1 << 20


@dataclass
class SuperhedgeResult:
    price: float
    witness: AdaptedStrategy | None
    slack: np.ndarray | None
    price_lower: float | None = None
    bounds: dict | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def grid_gap(self) -> float | None:
        return None if self.price_lower is None else self.price - self.price_lower


def strategy_grid(model, box=1.0, grid=101):
    """Node grids: ``grid`` points per axis on ``[-box, box]^d``, or an explicit array/mapping."""
    if np.isscalar(grid):
        return axis_grid(float(box), int(grid), model.d)
    return grid


def _claim(model, f) -> np.ndarray:
    f = np.asarray(f, dtype=float).reshape(-1)
    if f.size == 1:
        f = np.full(model.tree.n_leaves, f[0])
    if f.size != model.tree.n_leaves:
        raise ValueError(f"claim has {f.size} entries, tree has {model.tree.n_leaves} leaves")
    if not np.all(np.isfinite(f)):
        raise ValueError("claim must be finite at every leaf")
    return f


def _lipschitz(model) -> float | None:
    """Sup-norm Lipschitz constant of ``V`` per node coordinate block, when known."""
    if not getattr(model, "additive", False):
        return None
    if any(not isinstance(c, ProportionalCost) for c in model.costs):
        return None
    inc = np.abs(model.increments[1:]).sum(axis=1).max(initial=0.0)
    rate = sum(float(c._node_rate.max()) for c in model.costs)
    return model.T * (inc + 2.0 * model.d * rate)


def _grid_step(grids) -> float:
    steps = []
    for g in grids:
        for k in range(g.shape[1]):
            u = np.unique(g[:, k])
            if u.size > 1:
                steps.append(np.diff(u).max())
    return max(steps, default=0.0)


def _dp(model, f: np.ndarray, grids: list):
    tree = model.tree
    d = model.d
    W = {}
    arg = {}
    for leaf_pos, leaf in enumerate(tree.leaves):
        W[leaf] = f[leaf_pos]
    for node in sorted(tree.decision_nodes, key=lambda n: -tree.time[n]):
        t = tree.time[node]
        G = grids[tree.dec_index[node]]
        m = G.shape[0]
        P = np.zeros((1, d)) if node == 0 else grids[tree.dec_index[tree.parent[node]]]
        mp = P.shape[0]
        best = np.empty(mp)
        best_arg = np.empty(mp, dtype=np.int64)
        chunk = max(1, ROW_CHUNK // m)
        for lo in range(0, mp, chunk):
            Pc = P[lo:lo + chunk]
            xp = np.repeat(Pc, m, axis=0)
            x = np.tile(G, (Pc.shape[0], 1))
            nodes = np.full(x.shape[0], node)
            Q = np.full((Pc.shape[0], m), -np.inf)
            for c in tree.children[node]:
                s = model.step(t, nodes, np.full(x.shape[0], c), xp, x).reshape(Pc.shape[0], m)
                Q = np.maximum(Q, W[c] - s)
            best_arg[lo:lo + chunk] = np.argmin(Q, axis=1)
            best[lo:lo + chunk] = Q[np.arange(Q.shape[0]), best_arg[lo:lo + chunk]]
        W[node] = best
        arg[node] = best_arg
    values = np.zeros((tree.n_decision, d))
    chosen = {}
    for node in tree.decision_nodes:
        p = 0 if node == 0 else chosen[tree.parent[node]]
        k = int(arg[node][p])
        chosen[node] = k
        values[tree.dec_index[node]] = grids[tree.dec_index[node]][k]
    return float(W[0][0]), AdaptedStrategy(tree, values)


def _enumerate(model, f: np.ndarray, grid, budget: int):
    best, best_vals = np.inf, None
    for block in iter_adapted_grid_batches(model.tree, grid, budget):
        V = np.asarray(model.hat(block), dtype=float)
        with np.errstate(invalid="ignore"):
            score = (f - V).max(axis=1)
        k = int(np.argmin(score))
        if score[k] < best:
            best, best_vals = float(score[k]), block[k].copy()
    if best_vals is None:
        return np.inf, None
    return best, AdaptedStrategy(model.tree, best_vals)


def superhedge_price(model, f, box=1.0, grid=101, budget: int = 10**6, method: str = "auto") -> SuperhedgeResult:
    """Price of the claim ``f`` over grid strategies in ``[-box, box]``.

    ``method`` is ``"dp"`` (additive models), ``"enumerate"`` or ``"auto"``.
    Raises :class:`InfeasibleEverywhere` when every grid strategy has a
    ``-inf`` outcome, i.e. the price is ``+inf``.
    """
    f = _claim(model, f)
    G = strategy_grid(model, box, grid)
    grids = _node_grids(model.tree, G)
    use_dp = method == "dp" or (method == "auto" and getattr(model, "additive", False))
    if use_dp:
        price, witness = _dp(model, f, grids)
    else:
        price, witness = _enumerate(model, f, G, budget)
    if not np.isfinite(price):
        raise InfeasibleEverywhere("every grid strategy has a -inf outcome; the price is +inf")
    V = np.asarray(model.hat(witness), dtype=float)
    slack = price + V - f
    L = _lipschitz(model)
    lower = None if L is None else price - L * _grid_step(grids) / 2.0
    meta = {"method": "dp" if use_dp else "enumerate", "box": box,
            "grid": grid if np.isscalar(grid) else "explicit", "grid_step": _grid_step(grids)}
    return SuperhedgeResult(price, witness, slack, lower, None, meta)


def superhedge_feasible(model, g, box=1.0, grid=101, tol: float = 1e-9, budget: int = 10**6):
    """``(True, witness)`` when some grid strategy has ``V >= g - tol`` at every leaf."""
    try:
        res = superhedge_price(model, g, box, grid, budget)
    except InfeasibleEverywhere:
        return False, None
    if res.price <= tol:
        return True, res.witness
    return False, None


@dataclass
class StrategyBounds:
    """Largest ``|theta_t|_inf`` per ``F_t`` atom over feasible grid strategies."""

    per_node: dict
    per_time: list
    K: np.ndarray
    feasible_count: int
    caveat: str = "within box and grid"


def strategy_bounds(model, f, box=1.0, grid=101, tol: float = 1e-6, budget: int = 10**6) -> StrategyBounds:
    """Per-atom bounds ``m_t`` over grid strategies with ``V >= f - tol`` at every leaf.

    ``K`` is the per-leaf sum of ``m_t`` along the path.
    """
    tree = model.tree
    f = _claim(model, f)
    G = strategy_grid(model, box, grid)
    m = np.full(tree.n_decision, -np.inf)
    count = 0
    for block in iter_adapted_grid_batches(tree, G, budget):
        V = np.asarray(model.hat(block), dtype=float)
        ok = np.all(V >= f - tol, axis=1)
        if ok.any():
            count += int(ok.sum())
            m = np.maximum(m, np.abs(block[ok]).max(axis=2).max(axis=0))
    if count == 0:
        raise EmptyFeasibleSet("no grid strategy in the box dominates the claim")
    per_node = {tree.ids[n]: float(m[k]) for k, n in enumerate(tree.decision_nodes)}
    per_time = [m[[tree.dec_index[n] for n in tree.nodes_at(t)]] for t in range(tree.T)]
    K = m[tree.leaf_dec_paths].sum(axis=1)
    return StrategyBounds(per_node, per_time, K, count)


@dataclass
class ClosednessReport:
    trials: int
    passed: int
    failures: list

    @property
    def pass_rate(self) -> float:
        return self.passed / self.trials if self.trials else 1.0


def closedness_probe(model, box=1.0, grid=11, trials: int = 100, seed: int = 0, sequences=None,
                     tol: float = 1e-9) -> ClosednessReport:
    """Check that limits of sequences in the superhedgeable set stay in it.

    ``sequences`` is an iterable of ``(h_k callable, limit)`` pairs; by
    default random sequences are built from grid strategies ``theta`` as
    ``V(theta + e/k) - s - u/k`` with ``s, u >= 0``, whose limit is
    evaluated at ``k = 2**40``.  Each limit is tested with
    :func:`superhedge_feasible`.
    """
    tree = model.tree
    G = strategy_grid(model, box, grid)
    grids = _node_grids(tree, G)
    rng = np.random.default_rng(seed)
    if sequences is None:
        sequences = []
        for _ in range(trials):
            # draw strategies with finite outcomes so the sequence stays in the set
            for _attempt in range(100):
                theta = np.array([g[rng.integers(g.shape[0])] for g in grids])
                if np.all(np.isfinite(model.hat(theta))):
                    break
            e = rng.uniform(-1.0, 1.0, theta.shape) * (rng.random() < 0.5)
            if not all(np.all(np.isfinite(model.hat(theta + e / k))) for k in (1.0, 2.0**40)):
                e = np.zeros_like(theta)
            s = rng.uniform(0.0, 1.0, tree.n_leaves) * (rng.random() < 0.5)
            u = rng.uniform(0.0, 1.0, tree.n_leaves)

            def h(k, theta=theta, e=e, s=s, u=u):
                return np.asarray(model.hat(theta + e / k), dtype=float) - s - u / k

            sequences.append((h, h(2.0**40)))
    failures = []
    passed = 0
    count = 0
    for h, limit in sequences:
        count += 1
        ok, _ = superhedge_feasible(model, limit, box, G, tol)
        if ok:
            passed += 1
        else:
            failures.append({"limit": np.asarray(limit).tolist(), "tail": np.asarray(h(1e6)).tolist()})
    return ClosednessReport(count, passed, failures)

