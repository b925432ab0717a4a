"""Recession models: behaviour of a market along rays of large positions.

The numeric route discretises

    V_inf(omega, z) = lim_{lam -> inf} sup_{delta > lam, |x - z|_inf < 1/lam} V(omega, delta x) / delta

on a geometric ladder of ``lam``; the analytic route asks the model for its
closed form.  :func:`cross_validate_recession` compares the two.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import NoAnalyticForm, NoConvergence
from .models import MarketIntegrand, VectorIntegrand


class RecessionIntegrand(MarketIntegrand):
    """Closed-form recession of a model; positively homogeneous by construction."""

    positively_homogeneous = True
    has_analytic_recession = True

    def __init__(self, model: MarketIntegrand):
        super().__init__(model.tree, model.d)
        self.model = model
        self.provenance = "analytic"
        self.name = f"recession({model.name})"
        if isinstance(model, VectorIntegrand):
            self.n = model.n

    def evaluate(self, leaves, X):
        return self.model._recession_evaluate(np.asarray(leaves), np.asarray(X, dtype=float))

    _recession_evaluate = evaluate

    def na_certificate(self):
        return self.model.na_certificate()


def recession_analytic(model: MarketIntegrand) -> RecessionIntegrand:
    """Analytic recession model; raises :class:`NoAnalyticForm` when none is known."""
    if isinstance(model, RecessionIntegrand):
        return model
    if not model.has_analytic_recession:
        raise NoAnalyticForm(f"{model.name} has no analytic recession model")
    return RecessionIntegrand(model)


@dataclass
class RecessionSchedule:
    """Discretisation of the recession limit.

    Rungs are ``lam = 2**k`` for ``k`` in ``exponents``; at each rung the
    scale ``delta`` runs over ``lam * 2**(j/2)``, ``j = 1..12`` (up to
    ``64 lam``), and ``x`` over ``z + shrink/lam * u`` for offsets ``u`` in
    the unit cube (centre, vertices or seeded random points, and the
    coordinate directions).
    """

    exponents: tuple = tuple(range(4, 61))
    delta_steps: int = 12
    shrink: float = 1.0 - 1e-9
    max_vertices_dim: int = 6
    random_offsets: int = 64
    stagnation_tol: float = 1e-10
    cap: float = 1e12
    seed: int = 0

    def offsets(self, dim: int) -> np.ndarray:
        rows = [np.zeros(dim)]
        eye = np.eye(dim)
        rows.extend(eye)
        rows.extend(-eye)
        if dim <= self.max_vertices_dim:
            rows.extend(np.array(v, dtype=float) for v in itertools.product((-1.0, 1.0), repeat=dim))
        else:
            rng = np.random.default_rng(self.seed)
            rows.extend(rng.uniform(-1.0, 1.0, size=(self.random_offsets, dim)))
        return np.unique(np.array(rows), axis=0)

    def delta_factors(self) -> np.ndarray:
        return 2.0 ** (np.arange(1, self.delta_steps + 1) / 2.0)


@dataclass
class RecessionEstimate:
    """Per-leaf outcome of :func:`recession_numeric`."""

    value: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    classification: list
    converged: np.ndarray
    rungs_used: np.ndarray
    history: list = field(repr=False, default_factory=list)


def recession_numeric(model: MarketIntegrand, z, schedule: RecessionSchedule | None = None, strict: bool = False) -> RecessionEstimate:
    """Estimate ``V_inf(omega, z)`` at every leaf for a deterministic path vector ``z``.

    Estimates are classified ``"finite"`` once two successive rungs agree to
    ``stagnation_tol``, and ``"+inf"``/``"-inf"`` once two successive rungs
    lie beyond ``cap`` (or are infinite).  Leaves left unclassified when the
    ladder runs out are tagged ``"unconverged"``; with ``strict=True`` that
    raises :class:`NoConvergence`.
    """
    schedule = schedule or RecessionSchedule()
    z = np.asarray(z, dtype=float).reshape(-1)
    L = model.tree.n_leaves
    U = schedule.offsets(z.size)
    factors = schedule.delta_factors()

    value = np.full(L, np.nan)
    cls = ["unconverged"] * L
    done = np.zeros(L, dtype=bool)
    upper = np.full(L, np.inf)
    last = np.full(L, np.nan)
    rungs = np.zeros(L, dtype=int)
    history = []
    for k in schedule.exponents:
        lam = 2.0**k
        X = z + (schedule.shrink / lam) * U
        deltas = lam * factors
        pts = (deltas[:, None, None] * X[None]).reshape(-1, z.size)
        with np.errstate(invalid="ignore", over="ignore"):
            vals = model.everywhere(pts).reshape(deltas.size, U.shape[0], L)
            vals = vals / deltas[:, None, None]
        est = vals.reshape(-1, L).max(axis=0)
        history.append(est)
        upper = np.minimum(upper, est)
        for i in np.flatnonzero(~done):
            rungs[i] += 1
            prev, cur = last[i], est[i]
            if np.isnan(prev):
                continue
            if cur == -np.inf and prev == -np.inf or (cur < -schedule.cap and prev < -schedule.cap):
                value[i], cls[i], done[i] = -np.inf, "-inf", True
            elif cur == np.inf and prev == np.inf or (cur > schedule.cap and prev > schedule.cap):
                value[i], cls[i], done[i] = np.inf, "+inf", True
            elif np.isfinite(cur) and np.isfinite(prev) and abs(cur - prev) <= schedule.stagnation_tol * max(1.0, abs(cur)):
                value[i], cls[i], done[i] = cur, "finite", True
        last = est
        if done.all():
            break
    for i in np.flatnonzero(~done):
        value[i] = last[i]
    if strict and not done.all():
        raise NoConvergence(f"recession ladder exhausted at leaves {np.flatnonzero(~done).tolist()}")
    return RecessionEstimate(value, last.copy(), upper, cls, done, rungs, history)


def classify(v: float) -> str:
    if v == np.inf:
        return "+inf"
    if v == -np.inf:
        return "-inf"
    return "finite"


def default_grid(dim: int, points: int = 21, seed: int = 0, radius: float = 1.0) -> np.ndarray:
    """``points`` path vectors: an axis grid when ``dim == 1``, else 0, +-e_i and seeded draws."""
    if dim == 1:
        return np.linspace(-radius, radius, points)[:, None]
    rows = [np.zeros(dim)]
    for i in range(dim):
        rows.append(radius * np.eye(dim)[i])
        rows.append(-radius * np.eye(dim)[i])
    rng = np.random.default_rng(seed)
    while len(rows) < points:
        rows.append(rng.uniform(-radius, radius, size=dim).round(3))
    return np.array(rows[:points])


@dataclass
class CrossValidationReport:
    max_gap: float
    class_mismatches: list
    homogeneity_error: float
    rows: list
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_gap <= self.tol and not self.class_mismatches and self.homogeneity_error <= 1e-9


def cross_validate_recession(model: MarketIntegrand, grid=None, schedule: RecessionSchedule | None = None, tol: float = 1e-4) -> CrossValidationReport:
    """Compare numeric and analytic recession on every grid point and leaf."""
    analytic = recession_analytic(model)
    grid = default_grid(model.dim) if grid is None else np.asarray(grid, dtype=float).reshape(-1, model.dim)
    schedule = schedule or RecessionSchedule()
    ids = model.tree.leaf_ids
    rows = []
    gap = 0.0
    mismatches = []
    homog = 0.0
    for z in grid:
        num = recession_numeric(model, z, schedule)
        ana = analytic.everywhere(z[None])[0]
        for i in range(model.tree.n_leaves):
            a, n = ana[i], num.value[i]
            ca, cn = classify(a), num.classification[i]
            rows.append((ids[i], *z, a, num.lower[i], num.upper[i], cn))
            if ca != cn:
                mismatches.append((ids[i], tuple(z), ca, cn))
            elif ca == "finite":
                gap = max(gap, abs(a - n))
        for lam in (0.5, 2.0, 3.0):
            scaled = analytic.everywhere((lam * z)[None])[0]
            both = np.isfinite(scaled) & np.isfinite(ana)
            if np.any(np.isfinite(scaled) != np.isfinite(ana)) or np.any(np.sign(scaled[~both]) != np.sign(ana[~both])):
                homog = np.inf
            elif both.any():
                homog = max(homog, float(np.max(np.abs(scaled[both] - lam * ana[both]) / np.maximum(1.0, np.abs(ana[both])))))
    return CrossValidationReport(gap, mismatches, homog, rows, tol)
