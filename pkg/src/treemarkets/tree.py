"""Finite filtered probability spaces as rooted scenario trees.

Every node at time ``t`` is an atom of ``F_t``; a strategy is adapted
exactly when it assigns one vector per non-terminal node.  Leaves carry
strictly positive probability, so "almost surely" means "at every leaf".

Node ordering is breadth-first (time-major, children in input order).  With
that ordering the leaves of any subtree form a contiguous block, which the
expectation and atom helpers rely on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import BudgetExceeded, InvalidGrid, MalformedTree, ProbabilityError

BUILD_TOL = 1e-12
AUDIT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ScenarioTree:
    ids: tuple
    time: np.ndarray
    parent: np.ndarray
    children: tuple
    cond_prob: np.ndarray
    prob: np.ndarray
    T: int
    _index: dict = field(repr=False)

    def __post_init__(self):
        n = len(self.ids)
        leaves = np.flatnonzero(self.time == self.T)
        decision = np.flatnonzero(self.time < self.T)
        dec_index = np.full(n, -1, dtype=int)
        dec_index[decision] = np.arange(decision.size)
        leaf_pos = np.full(n, -1, dtype=int)
        leaf_pos[leaves] = np.arange(leaves.size)

        paths = np.empty((leaves.size, self.T + 1), dtype=int)
        for k, leaf in enumerate(leaves):
            node = leaf
            for t in range(self.T, -1, -1):
                paths[k, t] = node
                node = self.parent[node]

        # contiguous leaf block under every node
        lo = np.zeros(n, dtype=int)
        hi = np.zeros(n, dtype=int)
        lo[leaves] = np.arange(leaves.size)
        hi[leaves] = lo[leaves] + 1
        for node in sorted(range(n), key=lambda i: -self.time[i]):
            if self.children[node]:
                lo[node] = min(lo[c] for c in self.children[node])
                hi[node] = max(hi[c] for c in self.children[node])

        for name, value in [
            ("leaves", leaves),
            ("decision_nodes", decision),
            ("dec_index", dec_index),
            ("leaf_pos", leaf_pos),
            ("leaf_paths", paths),
            ("leaf_dec_paths", dec_index[paths[:, : self.T]]),
            ("leaf_lo", lo),
            ("leaf_hi", hi),
        ]:
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    # basic accessors -----------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self.ids)

    @property
    def n_leaves(self) -> int:
        return self.leaves.size

    @property
    def n_decision(self) -> int:
        return self.decision_nodes.size

    @property
    def leaf_prob(self) -> np.ndarray:
        return self.prob[self.leaves]

    @property
    def leaf_ids(self) -> list:
        return [self.ids[i] for i in self.leaves]

    def index(self, node_id) -> int:
        try:
            return self._index[str(node_id)]
        except KeyError:
            raise KeyError(f"unknown node id {node_id!r}") from None

    def nodes_at(self, t: int) -> np.ndarray:
        return np.flatnonzero(self.time == t)

    def leaves_under(self, node: int) -> np.ndarray:
        """Leaf positions (not node indices) below ``node``."""
        return np.arange(self.leaf_lo[node], self.leaf_hi[node])

    def node_array(self, values, dim: int | None = None) -> np.ndarray:
        """Per-node array from a mapping ``id -> value`` or a sequence in node order.

        Returns shape ``(n_nodes,)`` when ``dim`` is None, else ``(n_nodes, dim)``.
        """
        if isinstance(values, Mapping):
            missing = [i for i in self.ids if i not in values and str(i) not in values]
            if missing:
                raise MalformedTree(f"no value given for nodes {missing[:5]}")
            rows = [values[i] if i in values else values[str(i)] for i in self.ids]
        else:
            rows = list(values)
            if len(rows) != self.n_nodes:
                raise MalformedTree(f"expected {self.n_nodes} node values, got {len(rows)}")
        arr = np.asarray(rows, dtype=float)
        if dim is None:
            return arr.reshape(self.n_nodes)
        return arr.reshape(self.n_nodes, dim)

    def expectation(self, values: np.ndarray) -> np.ndarray:
        """Probability-weighted sum over leaves along the last axis.

        Summation is grouped by subtree, children in order, so any two callers
        that feed identical leaf terms get bit-identical totals.
        """
        values = np.asarray(values, dtype=float)
        return self.grouped_sum(values * self.leaf_prob)

    def grouped_sum(self, terms: np.ndarray) -> np.ndarray:
        terms = np.asarray(terms, dtype=float)
        acc = {}
        for k, leaf in enumerate(self.leaves):
            acc[leaf] = terms[..., k]
        for t in range(self.T - 1, -1, -1):
            for node in self.nodes_at(t):
                total = 0.0
                for c in self.children[node]:
                    total = total + acc.pop(c)
                acc[node] = total
        return acc[0]


def build_tree(spec) -> ScenarioTree:
    """Validate a node list and return the tree.

    ``spec`` is either a sequence of node records ``{id, time, parent, prob}``
    or a mapping with a ``nodes`` key.  ``prob`` is the conditional
    probability of moving from the parent to the node; the root's entry is
    ignored if present (it must then equal 1).
    """
    records = spec["nodes"] if isinstance(spec, Mapping) else spec
    if not records:
        raise MalformedTree("tree has no nodes")
    raw = {}
    for rec in records:
        nid = str(rec["id"])
        if nid in raw:
            raise MalformedTree(f"duplicate node id {nid!r}")
        parent = rec.get("parent")
        raw[nid] = {
            "time": int(rec["time"]),
            "parent": None if parent is None else str(parent),
            "prob": rec.get("prob"),
        }

    roots = [k for k, v in raw.items() if v["parent"] is None]
    if len(roots) != 1:
        raise MalformedTree(f"expected exactly one root, found {len(roots)}")
    root = roots[0]
    if raw[root]["time"] != 0:
        raise MalformedTree("root must be at time 0")
    rp = raw[root]["prob"]
    if rp is not None and abs(float(rp) - 1.0) > BUILD_TOL:
        raise ProbabilityError("root probability must be 1")

    kids = {k: [] for k in raw}
    for k, v in raw.items():
        if v["parent"] is None:
            continue
        if v["parent"] not in raw:
            raise MalformedTree(f"node {k!r} has dangling parent {v['parent']!r}")
        if v["time"] != raw[v["parent"]]["time"] + 1:
            raise MalformedTree(f"time gap between {v['parent']!r} and {k!r}")
        kids[v["parent"]].append(k)

    order = [root]
    for nid in order:
        order.extend(kids[nid])
    if len(order) != len(raw):
        raise MalformedTree("tree contains nodes unreachable from the root (cycle?)")

    T = max(v["time"] for v in raw.values())
    if T < 1:
        raise MalformedTree("horizon must be at least 1")
    for nid in order:
        if not kids[nid] and raw[nid]["time"] != T:
            raise MalformedTree(f"leaf {nid!r} is at time {raw[nid]['time']}, not T={T}")

    index = {nid: i for i, nid in enumerate(order)}
    n = len(order)
    time = np.array([raw[nid]["time"] for nid in order], dtype=int)
    parent = np.array([-1 if raw[nid]["parent"] is None else index[raw[nid]["parent"]] for nid in order])
    children = tuple(tuple(index[c] for c in kids[nid]) for nid in order)
    cond = np.ones(n)
    for i, nid in enumerate(order[1:], start=1):
        p = raw[nid]["prob"]
        if p is None:
            raise ProbabilityError(f"node {nid!r} has no probability")
        p = float(p)
        if not (p > 0.0) or p > 1.0 + BUILD_TOL:
            raise ProbabilityError(f"node {nid!r} has probability {p} outside (0, 1]")
        cond[i] = p
    for i in range(n):
        if children[i]:
            s = cond[list(children[i])].sum()
            if abs(s - 1.0) > BUILD_TOL:
                raise ProbabilityError(f"children of {order[i]!r} sum to {s!r}, not 1")

    prob = np.ones(n)
    for i in range(1, n):
        prob[i] = prob[parent[i]] * cond[i]

    for arr in (time, parent, cond, prob):
        arr.setflags(write=False)
    return ScenarioTree(tuple(order), time, parent, children, cond, prob, T, index)


def uniform_tree(branching: int, T: int, probs: Sequence[float] | None = None) -> ScenarioTree:
    """Non-recombining tree with ``branching`` children per node.

    Node ids spell the path: the root is ``"o"``, its children ``"o0"``, ``"o1"``...
    """
    if probs is None:
        probs = [1.0 / branching] * branching
    if len(probs) != branching:
        raise ProbabilityError("need one probability per branch")
    nodes = [{"id": "o", "time": 0, "parent": None}]
    frontier = ["o"]
    for t in range(1, T + 1):
        nxt = []
        for p in frontier:
            for k in range(branching):
                nid = f"{p}{k}"
                nodes.append({"id": nid, "time": t, "parent": p, "prob": probs[k]})
                nxt.append(nid)
        frontier = nxt
    return build_tree(nodes)


def path_tree(T: int) -> ScenarioTree:
    """Deterministic tree: one child per node."""
    return uniform_tree(1, T, [1.0])


def random_tree(rng: np.random.Generator, T: int, max_branching: int = 3, min_branching: int = 1) -> ScenarioTree:
    nodes = [{"id": "o", "time": 0, "parent": None}]
    frontier = ["o"]
    for t in range(1, T + 1):
        nxt = []
        for p in frontier:
            b = int(rng.integers(min_branching, max_branching + 1))
            w = rng.uniform(0.2, 1.0, size=b)
            w = w / w.sum()
            w[-1] = 1.0 - w[:-1].sum()
            for k in range(b):
                nid = f"{p}{k}"
                nodes.append({"id": nid, "time": t, "parent": p, "prob": float(w[k])})
                nxt.append(nid)
        frontier = nxt
    return build_tree(nodes)


@dataclass(frozen=True, eq=False)
class AdaptedStrategy:
    """One ``R^d`` vector per non-terminal node (rows follow ``tree.decision_nodes``)."""

    tree: ScenarioTree
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v.reshape(self.tree.n_decision, -1)
        if v.shape[0] != self.tree.n_decision:
            raise MalformedTree(
                f"strategy has {v.shape[0]} rows, tree has {self.tree.n_decision} decision nodes"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @classmethod
    def zeros(cls, tree: ScenarioTree, d: int) -> "AdaptedStrategy":
        return cls(tree, np.zeros((tree.n_decision, d)))

    @classmethod
    def constant(cls, tree: ScenarioTree, q) -> "AdaptedStrategy":
        """Deterministic strategy from a path vector of length ``d*T``."""
        q = np.asarray(q, dtype=float).reshape(tree.T, -1)
        times = tree.time[tree.decision_nodes]
        return cls(tree, q[times])

    @classmethod
    def from_mapping(cls, tree: ScenarioTree, values: Mapping, d: int) -> "AdaptedStrategy":
        rows = np.zeros((tree.n_decision, d))
        for nid, v in values.items():
            node = tree.index(nid)
            if tree.dec_index[node] < 0:
                raise MalformedTree(f"node {nid!r} is terminal")
            rows[tree.dec_index[node]] = v
        return cls(tree, rows)

    def at(self, node_id) -> np.ndarray:
        return self.values[self.tree.dec_index[self.tree.index(node_id)]]

    def path(self, leaf) -> np.ndarray:
        return restrict_to_path(self, leaf)

    def paths(self) -> np.ndarray:
        """All path vectors, shape ``(n_leaves, d*T)``."""
        return self.values[self.tree.leaf_dec_paths].reshape(self.tree.n_leaves, -1)

    def as_rows(self) -> list:
        return [(self.tree.ids[n], *self.values[k]) for k, n in enumerate(self.tree.decision_nodes)]


def restrict_to_path(strategy: AdaptedStrategy, leaf) -> np.ndarray:
    """Concatenate ``(theta_0, ..., theta_{T-1})`` along the root-to-leaf path.

    ``leaf`` is a node id or a node index of a time-``T`` node.
    """
    tree = strategy.tree
    node = tree.index(leaf) if isinstance(leaf, str) else int(leaf)
    pos = tree.leaf_pos[node]
    if pos < 0:
        raise MalformedTree(f"node {tree.ids[node]!r} is not a leaf")
    return strategy.values[tree.leaf_dec_paths[pos]].reshape(-1)


def ft_sets(tree: ScenarioTree, t: int) -> list:
    """Atoms of ``F_t`` as arrays of leaf positions."""
    if not 0 <= t <= tree.T:
        raise ValueError(f"t must lie in [0, {tree.T}]")
    return [tree.leaves_under(node) for node in tree.nodes_at(t)]


def _node_grids(tree: ScenarioTree, grid) -> list:
    if isinstance(grid, Mapping):
        grids = [np.atleast_2d(np.asarray(grid[tree.ids[n]], dtype=float)) for n in tree.decision_nodes]
    else:
        g = np.asarray(grid, dtype=float)
        if g.ndim == 1:
            g = g[:, None]
        grids = [g] * tree.n_decision
    for n, g in zip(tree.decision_nodes, grids):
        if g.shape[0] == 0:
            raise InvalidGrid(f"empty grid at node {tree.ids[n]!r}")
    return grids


def grid_count(tree: ScenarioTree, grid) -> int:
    count = 1
    for g in _node_grids(tree, grid):
        count *= g.shape[0]
    return count


def iter_adapted_grid_batches(tree: ScenarioTree, grid, budget: int = 10**6, batch: int = 4096) -> Iterator[np.ndarray]:
    """Yield arrays of shape ``(m, n_decision, d)`` covering every grid strategy.

    Order is lexicographic in the grid indices with the root varying slowest.
    """
    grids = _node_grids(tree, grid)
    count = grid_count(tree, grid)
    if count > budget:
        raise BudgetExceeded(f"{count} grid strategies exceed the budget {budget}")
    sizes = [g.shape[0] for g in grids]
    d = grids[0].shape[1]
    for start in range(0, count, batch):
        idx = np.arange(start, min(start + batch, count))
        out = np.empty((idx.size, len(grids), d))
        rem = idx
        for k in range(len(grids) - 1, -1, -1):
            out[:, k, :] = grids[k][rem % sizes[k]]
            rem = rem // sizes[k]
        yield out


def enumerate_adapted_grid(tree: ScenarioTree, grid, budget: int = 10**6) -> Iterator[AdaptedStrategy]:
    """Every adapted strategy whose node values lie in the node's grid.

    ``grid`` is one array of candidate points shared by all nodes, or a
    mapping from node id to its own array.
    """
    for block in iter_adapted_grid_batches(tree, grid, budget):
        for values in block:
            yield AdaptedStrategy(tree, values)


def axis_grid(box: float, points: int, d: int = 1) -> np.ndarray:
    """Lexicographically ordered grid on ``[-box, box]^d``.

    Points are ``-box + step * i`` so that a grid with ``2n-1`` points
    contains the ``n``-point grid bit for bit.
    """
    if points < 1:
        raise InvalidGrid("grid needs at least one point")
    if points == 1:
        axis = np.zeros(1)
    else:
        step = 2.0 * box / (points - 1)
        axis = -box + step * np.arange(points)
        axis[(points - 1) // 2] = 0.0 if points % 2 else axis[(points - 1) // 2]
    return np.array(list(itertools.product(axis, repeat=d)), dtype=float)
