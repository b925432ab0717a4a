"""Integrand representation of local market functionals on a finite tree.

On a finite tree the essential supremum of ``V_hat`` over adapted strategies
in a sup-norm ball around a deterministic strategy ``q`` localises to a
leafwise supremum over the ball: any ball point chosen leaf by leaf can be
pasted into an adapted strategy.  So ``p_{q,r}(omega)`` is a per-leaf
maximisation, and the reconstructed integrand

    V_check(omega, x) = min { p_{q,r}(omega) : |x - q|_inf < r }

is the upper semicontinuous envelope of the model (exact for usc models).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import GridTooCoarse, RefinementBudgetExceeded
from .models import MarketIntegrand
from .tree import AdaptedStrategy


def _value_fn(model):
    """Map deterministic path vectors ``(m, dT)`` to leaf values ``(m, L)``."""
    if isinstance(model, MarketIntegrand):
        return model.everywhere
    tree = model.tree
    times = tree.time[tree.decision_nodes]

    def values(X):
        X = np.asarray(X, dtype=float).reshape(-1, tree.T, model.d)
        return np.asarray(model.hat(X[:, times, :]), dtype=float)

    return values


# ---------------------------------------------------------------------------
# axioms


@dataclass
class AxiomReport:
    a1_pass: bool
    a2_pass: bool
    a1_failures: list
    a2_failures: list
    pairs_checked: int
    samples_per_pair: int

    @property
    def passed(self) -> bool:
        return self.a1_pass and self.a2_pass


def check_axioms(model, sample_budget: int = 200, seed: int = 0, scale: float = 1.0) -> AxiomReport:
    """Audit normalisation (A1) and locality (A2).

    A1 is ``V_hat(0) == 0`` exactly.  A2 is checked for every time ``t`` and
    every atom ``A`` of ``F_t``: zeroing ``theta_t`` off ``A`` must leave the
    outcome on ``A`` unchanged, bit for bit, for ``sample_budget`` random
    strategies.  ``model`` is anything with ``tree``, ``d`` and ``hat``.
    """
    tree = model.tree
    zero = np.zeros((tree.n_decision, model.d))
    v0 = np.asarray(model.hat(zero), dtype=float)
    bad = np.flatnonzero(~(v0 == 0).reshape(tree.n_leaves, -1).all(axis=1))
    a1_failures = [(tree.leaf_ids[i], v0[i].tolist() if v0.ndim > 1 else float(v0[i])) for i in bad]

    rng = np.random.default_rng(seed)
    a2_failures = []
    pairs = 0
    dec_time = tree.time[tree.decision_nodes]
    for t in range(tree.T):
        at_t = np.flatnonzero(dec_time == t)
        for node in tree.nodes_at(t):
            pairs += 1
            atom = tree.leaves_under(node)
            strategies = scale * rng.standard_normal((sample_budget, tree.n_decision, model.d))
            # sprinkle exact zeros and repeated values so kinks are exercised
            strategies[::7] = np.round(strategies[::7])
            local = strategies.copy()
            others = at_t[at_t != tree.dec_index[node]]
            local[:, others, :] = 0.0
            full = np.asarray(model.hat(strategies), dtype=float)[:, atom]
            cut = np.asarray(model.hat(local), dtype=float)[:, atom]
            eq = full == cut
            eq = eq.reshape(sample_budget, -1).all(axis=1)
            for k in np.flatnonzero(~eq)[:3]:
                a2_failures.append({"t": t, "atom": tree.ids[node], "sample": int(k)})
    return AxiomReport(not a1_failures, not a2_failures, a1_failures, a2_failures, pairs, sample_budget)


# ---------------------------------------------------------------------------
# local suprema


@dataclass
class RefineConfig:
    """Coarse grid plus bounded Brent refinement per coordinate."""

    points_per_axis: int = 9
    max_points: int = 4096
    sweeps: int = 3
    xatol: float = 1e-12
    interior: float = 1.0 - 1e-9
    budget: int = 200_000


def ball_extremum(model, q, r: float, sense: str = "max", opt: RefineConfig | None = None, extra_points=None) -> np.ndarray:
    """Per-leaf ``sup`` (or ``inf``) of ``V(omega, .)`` over the open ball ``|x - q|_inf < r``.

    ``extra_points`` (e.g. lattice points) are added to the candidate set
    when they lie strictly inside the ball.
    """
    opt = opt or RefineConfig()
    values = _value_fn(model)
    q = np.asarray(q, dtype=float).reshape(-1)
    dim = q.size
    sign = 1.0 if sense == "max" else -1.0
    rad = r * opt.interior
    g = opt.points_per_axis
    while g > 2 and g**dim > opt.max_points:
        g -= 2
    axis = np.linspace(-rad, rad, g) if g > 1 else np.zeros(1)
    mesh = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1).reshape(-1, dim) + q
    cand = [q[None], mesh]
    if extra_points is not None:
        extra = np.asarray(extra_points, dtype=float).reshape(-1, dim)
        inside = np.abs(extra - q).max(axis=1) < r
        cand.append(extra[inside])
    X = np.concatenate(cand)
    V = sign * values(X)
    best_idx = np.argmax(V, axis=0)
    best = V[best_idx, np.arange(V.shape[1])]
    used = X.shape[0]
    spacing = axis[1] - axis[0] if g > 1 else rad

    for leaf in range(V.shape[1]):
        if not np.isfinite(best[leaf]) and best[leaf] > 0:
            continue
        x = X[best_idx[leaf]].copy()
        fx = best[leaf]
        for _ in range(opt.sweeps):
            improved = False
            for i in range(dim):
                lo = max(q[i] - rad, x[i] - spacing)
                hi = min(q[i] + rad, x[i] + spacing)
                if hi <= lo:
                    continue

                def neg(s, i=i, x=x):
                    y = x.copy()
                    y[i] = s
                    v = sign * values(y[None])[0, leaf]
                    return 1e300 if v == -np.inf else -v

                res = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": opt.xatol})
                used += res.nfev
                if used > opt.budget:
                    raise RefinementBudgetExceeded(f"ball refinement used {used} evaluations")
                if -res.fun > fx:
                    fx = -res.fun
                    x[i] = res.x
                    improved = True
            if not improved:
                break
        best[leaf] = fx
    return sign * best


def p_qr(model, q, r: float, opt: RefineConfig | None = None, extra_points=None) -> np.ndarray:
    """Leafwise ``esssup`` of ``V_hat`` over adapted strategies within ``r`` of ``q``."""
    return ball_extremum(model, q, r, "max", opt, extra_points)


# ---------------------------------------------------------------------------
# reconstruction


@dataclass
class ReconstructionGrid:
    """Lattice ``Q`` on a box, radius ladder ``2^-1 .. 2^-depth`` and the ``p`` table.

    ``table[i, k, leaf] = p_{lattice[i], radii[k]}(leaf)``.
    """

    lattice: np.ndarray
    radii: np.ndarray
    table: np.ndarray
    sense: str = "max"
    opt: RefineConfig = field(default_factory=RefineConfig)


def lattice_points(dim: int, box: float = 1.0, points: int = 41) -> np.ndarray:
    axis = np.linspace(-box, box, points)
    return np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1).reshape(-1, dim)


def build_grid(model, box: float = 1.0, points: int = 41, depth: int = 8, sense: str = "max", opt: RefineConfig | None = None, lattice=None) -> ReconstructionGrid:
    opt = opt or RefineConfig()
    lat = lattice_points(model.d * model.tree.T, box, points) if lattice is None else np.asarray(lattice, dtype=float)
    radii = 2.0 ** -np.arange(1, depth + 1)
    L = model.tree.n_leaves
    table = np.empty((lat.shape[0], radii.size, L))
    for i, q in enumerate(lat):
        for k, r in enumerate(radii):
            table[i, k] = ball_extremum(model, q, r, sense, opt, extra_points=lat)
    return ReconstructionGrid(lat, radii, table, sense, opt)


def _deepen(model, x, start_depth, sense, opt, stab_tol, max_depth, current):
    """Continue the radius ladder at ``q = x`` until successive values stabilise."""
    prev = None
    best = current.copy()
    for k in range(start_depth + 1, max_depth + 1):
        v = ball_extremum(model, x, 2.0**-k, sense, opt)
        best = np.minimum(best, v) if sense == "max" else np.maximum(best, v)
        if prev is not None:
            same_inf = (v == prev) & ~np.isfinite(v)
            close = np.abs(v - prev) <= stab_tol * np.maximum(1.0, np.abs(v))
            if np.all(same_inf | close):
                return best
        prev = v
    raise GridTooCoarse(f"radius ladder did not stabilise at x={x.tolist()} by depth {max_depth}")


def _combine(grid: ReconstructionGrid, model, stab_tol, max_depth, refine):
    lat, radii, table = grid.lattice, grid.radii, grid.table
    L = table.shape[2]
    out = np.empty((lat.shape[0], L))
    for j, x in enumerate(lat):
        dist = np.abs(lat - x).max(axis=1)
        mask = dist[:, None] < radii[None, :]
        vals = table[mask]
        out[j] = vals.min(axis=0) if grid.sense == "max" else vals.max(axis=0)
        if refine:
            out[j] = _deepen(model, x, radii.size, grid.sense, grid.opt, stab_tol, max_depth, out[j])
    return out


class TabulatedIntegrand(MarketIntegrand):
    """Integrand known on a lattice of path vectors only."""

    def __init__(self, model, lattice, values, name="reconstructed"):
        super().__init__(model.tree, model.d)
        self.lattice = lattice
        self.values = values
        self.name = name
        self._lookup = {tuple(np.round(p, 12)): i for i, p in enumerate(lattice)}

    def rows_of(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.dim)
        try:
            return np.array([self._lookup[tuple(np.round(x, 12))] for x in X], dtype=int)
        except KeyError as exc:
            raise KeyError(f"path vector {exc.args[0]} is not on the lattice") from None

    def evaluate(self, leaves, X):
        return self.values[self.rows_of(X), np.asarray(leaves)]


def reconstruct_integrand(model, grid: ReconstructionGrid, refine: bool = True, stab_tol: float = 1e-9, max_depth: int = 40) -> TabulatedIntegrand:
    """Tabulate ``V_check`` on the grid lattice.

    The base ladder of ``grid`` is extended at each lattice point (centre
    ``q = x``) until two successive radii agree to ``stab_tol``;
    :class:`GridTooCoarse` if that does not happen by ``max_depth``.
    """
    if grid.sense != "max":
        raise ValueError("reconstruction needs a grid built with sense='max'")
    vals = _combine(grid, model, stab_tol, max_depth, refine)
    return TabulatedIntegrand(model, grid.lattice, vals)


def model_table(model, lattice) -> np.ndarray:
    return _value_fn(model)(lattice)


@dataclass
class EnvelopePair:
    lattice: np.ndarray
    f_plus: np.ndarray
    f_minus: np.ndarray
    model_values: np.ndarray

    @property
    def gap(self) -> np.ndarray:
        return self.f_plus - self.f_minus

    def leaf_gap(self) -> np.ndarray:
        """Largest envelope gap on the lattice, per leaf."""
        g = self.gap
        g = np.where(np.isnan(g), 0.0, g)
        return g.max(axis=0)


def envelopes(model, box: float = 1.0, points: int = 41, depth: int = 8, opt: RefineConfig | None = None, stab_tol: float = 1e-9, max_depth: int = 40, lattice=None) -> EnvelopePair:
    """Upper (sup over balls, inf over covers) and lower (mirrored) envelopes."""
    up = build_grid(model, box, points, depth, "max", opt, lattice)
    lo = build_grid(model, box, points, depth, "min", opt, up.lattice)
    f_plus = _combine(up, model, stab_tol, max_depth, True)
    f_minus = _combine(lo, model, stab_tol, max_depth, True)
    return EnvelopePair(up.lattice, f_plus, f_minus, model_table(model, up.lattice))


def monotonicity_violations(grid: ReconstructionGrid, tol: float = 1e-9) -> list:
    """Pairs breaking ``p_{q,r} <= p_{q',s}`` whenever ``s >= r + |q - q'|``."""
    lat, radii, table = grid.lattice, grid.radii, grid.table
    bad = []
    for i in range(lat.shape[0]):
        dist = np.abs(lat - lat[i]).max(axis=1)
        for k, r in enumerate(radii):
            for kk, s in enumerate(radii):
                js = np.flatnonzero(s >= r + dist)
                if js.size == 0:
                    continue
                small = table[i, k]
                big = table[js, kk]
                viol = small[None, :] > big + tol * np.maximum(1.0, np.abs(big))
                viol &= np.isfinite(small)[None, :]
                for j in js[np.any(viol, axis=1)]:
                    bad.append((i, k, int(j), kk))
    return bad


# ---------------------------------------------------------------------------
# upper semicontinuity


@dataclass
class UscReport:
    passed: bool
    sequences_checked: int
    counterexample: dict | None


def default_sequences(tree, d, rng, n_bases=8, max_dirs=16):
    """Bases (zero plus random) paired with directions; ``theta_n = base + dir * 2^-n``."""
    n = tree.n_decision * d
    bases = [np.zeros(n)] + [rng.standard_normal(n) for _ in range(n_bases - 1)]
    eye = np.eye(n)
    dirs = list(eye[:max_dirs // 2]) + list(-eye[:max_dirs // 2])
    dirs += [rng.standard_normal(n) for _ in range(max(2, max_dirs - len(dirs)))]
    for b in bases:
        for e in dirs:
            yield b.reshape(tree.n_decision, d), e.reshape(tree.n_decision, d)


def check_usc(model, sampler=None, seed: int = 0, depth: int = 40, tail: int = 6, tol: float = 1e-8) -> UscReport:
    """Check ``limsup V_hat(theta_n) <= V_hat(theta)`` along sampled convergent sequences.

    ``sampler(rng)`` yields ``(base, direction)`` pairs of strategy arrays;
    the sequence is ``base + direction * 2**-k`` for ``k = 1..depth`` and the
    limsup is read off the last ``tail`` terms.
    """
    rng = np.random.default_rng(seed)
    pairs = sampler(rng) if sampler is not None else default_sequences(model.tree, model.d, rng)
    steps = 2.0 ** -np.arange(1, depth + 1)
    count = 0
    for base, direction in pairs:
        count += 1
        seq = base[None] + steps[:, None, None] * direction[None]
        vals = np.asarray(model.hat(seq), dtype=float)
        limit = np.asarray(model.hat(base), dtype=float)
        limsup = vals[-tail:].max(axis=0)
        excess = limsup - limit
        bad = np.isfinite(limsup) & (excess > tol * (1.0 + np.abs(np.where(np.isfinite(limit), limit, 0.0))))
        bad |= np.isfinite(limsup) & (limit == -np.inf)
        if np.any(bad):
            leaf = int(np.flatnonzero(bad.reshape(bad.shape[0], -1).any(axis=1))[0]) if bad.ndim > 1 else int(np.flatnonzero(bad)[0])
            return UscReport(False, count, {
                "leaf": model.tree.leaf_ids[leaf],
                "base": base.tolist(),
                "direction": direction.tolist(),
                "limsup": np.asarray(limsup)[leaf].tolist(),
                "value": np.asarray(limit)[leaf].tolist(),
            })
    return UscReport(True, count, None)
