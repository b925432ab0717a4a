"""No-arbitrage decisions based on the recession model.

A market satisfies NA when the only adapted strategy with ``V_inf >= 0`` at
every leaf is zero.  For linear recession models this is decided exactly,
node by node (strictly positive martingale weights plus full rank of the
child increments).  For other positively homogeneous recession models the
unit sup-norm sphere of strategies is searched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from .errors import NotLinear, SearchBudgetExceeded
from .models import MarketIntegrand
from .recession import RecessionIntegrand, recession_analytic
from .tree import AdaptedStrategy

ARBITRAGE = "ARBITRAGE"
NA_CERTIFIED = "NA_CERTIFIED"
NA_UP_TO_SEARCH = "NA_UP_TO_SEARCH"


@dataclass
class NaVerdict:
    status: str
    witness: AdaptedStrategy | None = None
    certificate: dict | None = None
    margin: float | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def is_arbitrage(self) -> bool:
        return self.status == ARBITRAGE

    def to_dict(self) -> dict:
        out = {"status": self.status, "margin": _jsonable(self.margin), "certificate": self.certificate,
               "metadata": self.metadata}
        if self.witness is not None:
            out["witness"] = {row[0]: [float(v) for v in row[1:]] for row in self.witness.as_rows()}
        return out


def _jsonable(v):
    if v is None:
        return None
    v = float(v)
    if np.isfinite(v):
        return v
    return "inf" if v > 0 else "-inf"


def as_recession(model) -> MarketIntegrand:
    if isinstance(model, RecessionIntegrand):
        return model
    if getattr(model, "has_analytic_recession", False):
        return recession_analytic(model)
    return model


# ---------------------------------------------------------------------------
# linear recession models


def linear_coefficients(rec: MarketIntegrand, samples: int = 16, seed: int = 0, tol: float = 1e-9) -> np.ndarray:
    """Per-leaf coefficient matrix ``C`` with ``V_inf(omega, x) = <C[omega], x>``.

    Raises :class:`NotLinear` when sampled values disagree with the linear fit.
    """
    n = rec.dim
    L = rec.tree.n_leaves
    C = rec.everywhere(np.eye(n)).T  # (L, n)
    zero = rec.everywhere(np.zeros((1, n)))[0]
    if not np.all(zero == 0) or not np.all(np.isfinite(C)):
        raise NotLinear("recession is not finite-linear at the unit vectors")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((samples, L, n))
    got = rec.on_paths(X)
    want = np.einsum("mln,ln->ml", X, C)
    scale = 1.0 + np.abs(want)
    if not np.all(np.abs(got - want) <= tol * scale):
        raise NotLinear("recession values are not linear in the strategy")
    return C


def _node_increments(tree, C: np.ndarray, d: int) -> dict:
    """Child increment matrices per decision node, checking adaptedness."""
    out = {}
    for node in tree.decision_nodes:
        t = tree.time[node]
        rows = []
        for c in tree.children[node]:
            block = C[tree.leaves_under(c), t * d:(t + 1) * d]
            if np.abs(block - block[0]).max() > 1e-12 * (1.0 + np.abs(block).max()):
                raise NotLinear(f"increments after node {tree.ids[node]!r} are not known at the child")
            rows.append(block[0])
        out[node] = np.array(rows)
    return out


def martingale_weights(D: np.ndarray) -> tuple[np.ndarray | None, float]:
    """Maximise the smallest weight ``s`` with ``w >= s``, ``sum w = 1``, ``D' w = 0``.

    Returns ``(w, s)``; ``w`` is None when the program is infeasible.
    """
    k, d = D.shape
    c = np.zeros(k + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-np.eye(k), np.ones((k, 1))])
    b_ub = np.zeros(k)
    A_eq = np.vstack([np.append(np.ones(k), 0.0), np.hstack([D.T, np.zeros((d, 1))])])
    b_eq = np.append(1.0, np.zeros(d))
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=[(0, 1)] * k + [(None, 1)], method="highs")
    if res.status != 0:
        return None, -np.inf
    return res.x[:k], float(res.x[-1])


def _snap(theta: np.ndarray, max_den: int = 1000) -> np.ndarray:
    theta = theta / np.abs(theta).max()
    if theta[np.flatnonzero(np.abs(theta) > 1e-12)[0]] < 0:
        theta = -theta
    return np.array([float(Fraction(float(v)).limit_denominator(max_den)) for v in theta])


def one_step_arbitrage(D: np.ndarray, tol: float = 1e-9) -> np.ndarray | None:
    """``theta`` with ``D theta >= 0`` and some strictly positive entry, or None."""
    k, d = D.shape
    res = linprog(-D.sum(axis=0), A_ub=-D, b_ub=np.zeros(k), bounds=[(-1, 1)] * d, method="highs")
    if res.status != 0 or -res.fun <= tol * (1.0 + np.abs(D).max()):
        return None
    theta = res.x
    snapped = _snap(theta)
    if np.all(D @ snapped >= 0) and np.any(D @ snapped > 0):
        return snapped
    return theta


def redundancy_direction(D: np.ndarray, rel: float = 1e-9) -> np.ndarray | None:
    """Kernel vector of the increment matrix when its rank is below ``d``."""
    k, d = D.shape
    _, sv, vt = np.linalg.svd(D, full_matrices=True)
    scale = max(sv.max() if sv.size else 0.0, 1.0)
    rank = int(np.sum(sv > rel * scale))
    if rank == d:
        return None
    theta = vt[-1]
    snapped = _snap(theta)
    if np.abs(D @ snapped).max(initial=0.0) <= np.abs(D @ (theta / np.abs(theta).max())).max(initial=0.0):
        return snapped
    theta = theta / np.abs(theta).max()
    return theta if theta[np.flatnonzero(np.abs(theta) > 1e-12)[0]] > 0 else -theta


def _validate(rec, witness: AdaptedStrategy, tol: float) -> tuple[bool, float]:
    vals = np.asarray(rec.hat(witness), dtype=float)
    margin = float(vals.min())
    nonzero = bool(np.any(witness.values != 0))
    return nonzero and margin >= -tol, margin


def na_check_linear(model, tol: float = 1e-9) -> NaVerdict:
    """Exact NA decision for a recession model of the form ``sum_t <x_t, dS_{t+1}>``."""
    rec = as_recession(model)
    tree = rec.tree
    d = rec.d
    C = linear_coefficients(rec)
    incs = _node_increments(tree, C, d)
    cert = {}
    for node in tree.decision_nodes:
        D = incs[node]
        w, s = martingale_weights(D)
        theta = None
        reason = None
        if w is None or s <= tol:
            theta = one_step_arbitrage(D, tol)
            reason = "classical"
        if theta is None:
            red = redundancy_direction(D)
            if red is not None:
                theta, reason = red, "redundancy"
        if theta is not None and (reason == "redundancy" or w is None or s <= tol):
            values = np.zeros((tree.n_decision, d))
            values[tree.dec_index[node]] = theta
            witness = AdaptedStrategy(tree, values)
            exact, margin = _validate(rec, witness, 0.0)
            ok, margin = _validate(rec, witness, 1e-12 * (1.0 + np.abs(D).max()))
            if not ok:
                return NaVerdict(NA_UP_TO_SEARCH, None, None, margin, {
                    "method": "linear", "inconclusive_node": tree.ids[node], "kind": reason})
            return NaVerdict(ARBITRAGE, witness, None, margin, {
                "kind": reason, "node": tree.ids[node], "validated_exactly": exact,
            })
        if w is None or s <= tol:
            return NaVerdict(NA_UP_TO_SEARCH, None, None, None, {
                "method": "linear", "inconclusive_node": tree.ids[node]})
        cert[tree.ids[node]] = {
            "children": [tree.ids[c] for c in tree.children[node]],
            "weights": [float(v) for v in w],
            "min_weight": s,
            "rank": int(np.linalg.matrix_rank(D)) if D.size else 0,
        }
    return NaVerdict(NA_CERTIFIED, None, cert, None, {"method": "linear"})


# ---------------------------------------------------------------------------
# homogeneous recession models: sphere search


@dataclass
class SphereConfig:
    """Unit sup-norm sphere search.

    The sign lattice ``{-1,0,1}^n`` is used whole when it has at most
    ``lattice_max`` points, otherwise ``random_points`` seeded draws plus
    the signed unit vectors.  The ``refine_top`` best candidates are then
    improved coordinate by coordinate.
    """

    lattice_max: int = 20_000
    random_points: int = 4_000
    refine_top: int = 8
    sweeps: int = 30
    eps_cert: float = 1e-7
    seed: int = 0
    budget: int = 2_000_000


def _candidates(n: int, cfg: SphereConfig) -> np.ndarray:
    if 3**n - 1 <= cfg.lattice_max:
        axes = np.array(np.meshgrid(*([np.array([-1.0, 0.0, 1.0])] * n), indexing="ij")).reshape(n, -1).T
        return axes[np.abs(axes).max(axis=1) > 0]
    rng = np.random.default_rng(cfg.seed)
    pts = rng.uniform(-1.0, 1.0, size=(cfg.random_points, n))
    pts /= np.abs(pts).max(axis=1, keepdims=True)
    eye = np.eye(n)
    return np.vstack([eye, -eye, pts])


def _line_refine(score, x: np.ndarray, fx: float, i: int, levels: int = 12) -> tuple[np.ndarray, float, int]:
    """Improve coordinate ``i`` on nested local grids whose spacing shrinks tenfold per level."""
    evals = 0
    width = 1.0
    for _ in range(levels):
        pts = np.clip(x[i] + width * np.linspace(-1.0, 1.0, 21), -1.0, 1.0)
        trial = np.repeat(x[None], pts.size, axis=0)
        trial[:, i] = pts
        tv = score(trial)
        evals += pts.size
        j = int(np.argmax(tv))
        if tv[j] > fx:
            x, fx = trial[j].copy(), tv[j]
        width /= 10.0
    return x, fx, evals


def sphere_search(score, n: int, cfg: SphereConfig | None = None) -> tuple[np.ndarray, float, int]:
    """Maximise a scale-invariant ``score`` over nonzero vectors in ``R^n``.

    ``score`` maps a stack ``(m, n)`` to ``(m,)``.  Returns the best point
    (unit sup norm), its score and the number of evaluations.  The search
    stops early once a nonnegative score is found.
    """
    cfg = cfg or SphereConfig()
    cand = _candidates(n, cfg)
    vals = np.concatenate([score(cand[i:i + 2048]) for i in range(0, cand.shape[0], 2048)])
    evals = cand.shape[0]
    order = np.argsort(-vals, kind="stable")[: cfg.refine_top]
    best_x, best_v = cand[order[0]].copy(), vals[order[0]]
    if best_v == -np.inf or best_v >= 0:
        return best_x / np.abs(best_x).max(), best_v, evals
    for idx in order:
        x, fx = cand[idx].copy(), vals[idx]
        if not np.isfinite(fx):
            continue
        for _ in range(cfg.sweeps):
            start = fx
            for i in range(n):
                x, fx, used = _line_refine(score, x, fx, i)
                evals += used
            if evals > cfg.budget:
                raise SearchBudgetExceeded(f"sphere search used {evals} evaluations")
            if fx - start <= 1e-15 or fx >= 0:
                break
        if fx > best_v:
            best_x, best_v = x.copy(), fx
        if best_v >= 0:
            break
    best_x = best_x / np.abs(best_x).max()
    return best_x, best_v, evals


def homogeneous_margin(rec, strategies) -> np.ndarray:
    """``min_omega V_inf(theta)(omega) / |theta|_inf`` for a stack of strategies."""
    block = np.asarray(strategies, dtype=float)
    norms = np.abs(block.reshape(block.shape[0], -1)).max(axis=1)
    vals = np.asarray(rec.hat(block), dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(norms > 0, vals.min(axis=1) / norms, -np.inf)


def na_check_homogeneous(model, cfg: SphereConfig | None = None) -> NaVerdict:
    """Search for ``theta != 0`` with ``V_inf(theta) >= 0`` at every leaf."""
    cfg = cfg or SphereConfig()
    rec = as_recession(model)
    tree = rec.tree
    shape = (tree.n_decision, rec.d)
    n = tree.n_decision * rec.d

    def score(X):
        return homogeneous_margin(rec, X.reshape((-1,) + shape))

    x, margin, evals = sphere_search(score, n, cfg)
    meta = {"method": "sphere_search", "evaluations": evals, "dimension": n, "eps_cert": cfg.eps_cert}
    if margin >= -cfg.eps_cert:
        witness = AdaptedStrategy(tree, x.reshape(shape))
        ok, wm = _validate(rec, witness, cfg.eps_cert)
        if ok:
            meta["validated_exactly"] = wm >= 0
            return NaVerdict(ARBITRAGE, witness, None, float(margin), meta)
    return NaVerdict(NA_UP_TO_SEARCH, None, rec.na_certificate(), float(margin), meta)


def is_linear(model) -> bool:
    try:
        linear_coefficients(as_recession(model))
        return True
    except NotLinear:
        return False


def check_na(model, cfg: SphereConfig | None = None) -> NaVerdict:
    """Linear decision when the recession model is linear, sphere search otherwise."""
    rec = as_recession(model)
    try:
        return na_check_linear(rec)
    except NotLinear:
        return na_check_homogeneous(rec, cfg)


# ---------------------------------------------------------------------------
# viability and domination


@dataclass
class ViabilityReport:
    flag: str
    leaf_sup: np.ndarray
    min_leaf_sup: float
    sup_by_scale: list
    admissible_samples: int


def viability_probe(model, f, scales=None, samples: int = 256, cap: float = 1e6, seed: int = 0) -> ViabilityReport:
    """Probe boundedness of the dominated claims ``C_f``.

    Strategies of growing sup norm are sampled; those with ``V >= f`` at
    every leaf are admissible and their outcomes bound ``C_f`` from above.
    ``UNBOUNDED_SUSPECT`` when an admissible outcome exceeds ``cap``.
    """
    tree = model.tree
    f = np.broadcast_to(np.asarray(f, dtype=float).reshape(-1), (tree.n_leaves,)).copy()
    scales = 2.0 ** np.arange(0, 31) if scales is None else np.asarray(scales, dtype=float)
    rng = np.random.default_rng(seed)
    shape = (tree.n_decision, model.d)
    n = tree.n_decision * model.d
    lattice = _candidates(n, SphereConfig(lattice_max=256, random_points=64, seed=seed))
    best = np.full(tree.n_leaves, -np.inf)
    history = []
    kept = 0
    for s in scales:
        block = np.vstack([s * lattice, rng.uniform(-s, s, size=(samples, n))]).reshape((-1,) + shape)
        vals = np.asarray(model.hat(block), dtype=float)
        ok = np.all(vals >= f, axis=1)
        kept += int(ok.sum())
        if ok.any():
            best = np.maximum(best, vals[ok].max(axis=0))
        history.append((float(s), best.copy()))
    flag = "UNBOUNDED_SUSPECT" if np.any(best > cap) else "BOUNDED"
    return ViabilityReport(flag, best, float(best.min()), history, kept)


@dataclass
class DominationReport:
    dominated: bool
    violations: list
    checked: int


def domination_check(model_a, model_b, grid) -> DominationReport:
    """Verify ``V_a <= V_b`` at every leaf and grid path vector."""
    X = np.asarray(grid, dtype=float).reshape(-1, model_a.dim)
    va = model_a.everywhere(X)
    vb = model_b.everywhere(X)
    bad = np.argwhere(va > vb)
    ids = model_a.tree.leaf_ids
    viol = [(ids[j], X[i].tolist(), float(va[i, j]), float(vb[i, j])) for i, j in bad[:20]]
    return DominationReport(bad.size == 0, viol, int(va.size))


@dataclass
class DominatorReport:
    linear_dominator_exists: bool
    na_dominator_exists: bool
    min_weight: float
    slopes: np.ndarray | None


def frictionless_dominator(model, grid, tol: float = 1e-9) -> DominatorReport:
    """Is there a frictionless one-step market ``<x, s(omega)>`` dominating ``model`` on ``grid``?

    Two linear programs: plain domination ``<x, s_w> >= V(w, x)``, and
    domination by an arbitrage-free market.  The second substitutes
    ``u_w = p_w s_w`` for strictly positive martingale weights ``p``, which
    keeps it linear: ``<x, u_w> >= p_w V(w, x)``, ``sum p = 1``, ``sum u = 0``.
    """
    tree = model.tree
    if tree.T != 1:
        raise ValueError("frictionless_dominator handles one-period models only")
    X = np.asarray(grid, dtype=float).reshape(-1, model.d)
    V = model.everywhere(X)  # (m, L)
    L, d = tree.n_leaves, model.d

    rows, rhs = [], []
    for w in range(L):
        for i in np.flatnonzero(np.isfinite(V[:, w])):
            row = np.zeros(L * d)
            row[w * d:(w + 1) * d] = -X[i]
            rows.append(row)
            rhs.append(-V[i, w])
    res = linprog(np.zeros(L * d), A_ub=np.array(rows) if rows else None, b_ub=np.array(rhs) if rows else None,
                  bounds=[(None, None)] * (L * d), method="highs")
    linear_ok = res.status == 0
    slopes = res.x.reshape(L, d) if linear_ok else None

    # variables: u (L*d), p (L), s
    nv = L * d + L + 1
    rows, rhs = [], []
    for w in range(L):
        for i in np.flatnonzero(np.isfinite(V[:, w])):
            row = np.zeros(nv)
            row[w * d:(w + 1) * d] = -X[i]
            row[L * d + w] = V[i, w]
            rows.append(row)
            rhs.append(0.0)
        row = np.zeros(nv)
        row[L * d + w] = -1.0
        row[-1] = 1.0
        rows.append(row)
        rhs.append(0.0)
    A_eq = np.zeros((1 + d, nv))
    A_eq[0, L * d:L * d + L] = 1.0
    for w in range(L):
        A_eq[1:, w * d:(w + 1) * d] = np.eye(d)
    b_eq = np.append(1.0, np.zeros(d))
    c = np.zeros(nv)
    c[-1] = -1.0
    res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs), A_eq=A_eq, b_eq=b_eq,
                  bounds=[(None, None)] * (L * d) + [(0, 1)] * L + [(None, 1)], method="highs")
    s = float(res.x[-1]) if res.status == 0 else -np.inf
    return DominatorReport(linear_ok, s > tol, s, slopes)
