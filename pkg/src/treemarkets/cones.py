"""Random polyhedral cones and vector-valued markets.

A cone is given per leaf by finitely many generators; the positive polar
``K° = {y : <x, y> >= 0 for all x in K}`` is computed exactly by extreme-ray
enumeration plus its lineality space.  The polar generators double as the
facet normals of ``K`` (bipolar identity), which gives membership tests,
interior radii and the cone order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import lsq_linear

from .arbitrage import ARBITRAGE, NA_UP_TO_SEARCH, NaVerdict, SphereConfig, sphere_search
from .errors import (ConeMismatch, DegenerateCone, InconsistentScalarizations, NoAnalyticForm,
                     NotInterior, NotRelativeInterior, SingularGram, TargetMismatch)
from .models import MarketIntegrand, VectorIntegrand
from .tree import AdaptedStrategy, iter_adapted_grid_batches
from .superhedging import strategy_grid

RANK_TOL = 1e-9
MEMBER_TOL = 1e-9


def _rank_basis(A: np.ndarray, tol: float = RANK_TOL):
    """Orthonormal row-space and null-space bases of ``A``."""
    n = A.shape[1]
    if A.shape[0] == 0:
        return np.zeros((0, n)), np.eye(n)
    _, sv, vt = np.linalg.svd(A, full_matrices=True)
    scale = max(sv.max(initial=0.0), 1.0)
    ambiguous = (sv > 1e-13 * scale) & (sv <= tol * scale)
    if np.any(ambiguous):
        raise DegenerateCone(f"singular values {sv[ambiguous].tolist()} are too close to the rank threshold")
    r = int(np.sum(sv > tol * scale))
    return vt[:r], vt[r:]


def _normalise(G: np.ndarray) -> np.ndarray:
    G = np.asarray(G, dtype=float).reshape(-1, G.shape[-1] if np.ndim(G) > 1 else 1)
    norms = np.linalg.norm(G, axis=1)
    keep = norms > 1e-15
    return G[keep] / norms[keep, None]


def _dedupe(G: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    out = []
    for g in G:
        if not any(np.abs(g - h).max() <= tol for h in out):
            out.append(g)
    return np.array(out).reshape(-1, G.shape[1])


def polar_generators(G: np.ndarray, n: int, tol: float = 1e-10) -> np.ndarray:
    """Generators of ``{y : G y >= 0}``: extreme rays of the pointed part plus +-lineality."""
    G = np.asarray(G, dtype=float).reshape(-1, n)
    row, null = _rank_basis(G)
    r = row.shape[0]
    rays = [l for b in null for l in (b, -b)]
    if r > 0:
        M = G @ row.T  # (k, r); constraints M z >= 0 in row-space coordinates
        scale = np.abs(M).max()
        for sub in itertools.combinations(range(M.shape[0]), r - 1):
            if r == 1:
                cands = [np.array([1.0]), np.array([-1.0])]
            else:
                S = M[list(sub)]
                _, sv, vt = np.linalg.svd(S)
                if np.sum(sv > RANK_TOL * max(sv.max(), 1.0)) < r - 1:
                    continue
                z = vt[-1]
                cands = [z, -z]
            for z in cands:
                if np.all(M @ z >= -tol * scale):
                    y = row.T @ z
                    rays.append(y / np.linalg.norm(y))
    if not rays:
        return np.zeros((0, n))
    return _dedupe(np.array(rays))


class RandomCone:
    """Closed convex polyhedral cone per leaf, given by generators.

    ``generators`` is one ``(k, n)`` array shared by all leaves or a list
    with one array per leaf.  Zero generators are dropped and the rest
    normalised; an empty list stands for the cone ``{0}``.
    """

    def __init__(self, generators, n_leaves: int | None = None, n: int | None = None):
        if isinstance(generators, np.ndarray) or (generators and np.ndim(generators[0]) == 1):
            arr = np.asarray(generators, dtype=float)
            n = arr.shape[-1] if n is None else n
            per = [arr.reshape(-1, n)] * (n_leaves or 1)
        else:
            per = [np.asarray(g, dtype=float) for g in generators]
            n = next((g.shape[-1] for g in per if g.size), n)
            per = [g.reshape(-1, n) for g in per] if n is not None else per
            if not per and n is not None:
                per = [np.zeros((0, n))] * (n_leaves or 1)
        if n is None:
            raise ConeMismatch("cannot infer the dimension of an empty cone")
        self.n = int(n)
        self.generators = [_normalise(g) if g.size else np.zeros((0, self.n)) for g in per]
        self._polar = None

    @property
    def n_leaves(self) -> int:
        return len(self.generators)

    def leaf(self, k: int) -> np.ndarray:
        return self.generators[k if self.n_leaves > 1 else 0]

    def for_tree(self, tree) -> "RandomCone":
        if self.n_leaves == tree.n_leaves:
            return self
        if self.n_leaves != 1:
            raise ConeMismatch(f"cone has {self.n_leaves} leaves, tree has {tree.n_leaves}")
        return RandomCone([self.generators[0]] * tree.n_leaves, n=self.n)

    def facets(self, k: int) -> np.ndarray:
        """Unit normals ``F`` with ``K = {x : F x >= 0}`` at leaf ``k``."""
        return self.polar().leaf(k)

    def polar(self) -> "RandomCone":
        if self._polar is None:
            self._polar = RandomCone([polar_generators(g, self.n) for g in self.generators], n=self.n)
            self._polar._polar = self
        return self._polar

    def dimension(self, k: int) -> int:
        return _rank_basis(self.leaf(k))[0].shape[0]

    def solid(self, k: int) -> bool:
        return self.dimension(k) == self.n

    def contains(self, k: int, x, tol: float = MEMBER_TOL) -> np.ndarray:
        """Facet test for a stack of points ``(m, n)``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        F = self.facets(k)
        if F.shape[0] == 0:
            return np.ones(x.shape[0], dtype=bool)
        scale = 1.0 + np.abs(x).max(axis=1)
        return np.all(x @ F.T >= -tol * scale[:, None], axis=1)

    def contains_nnls(self, k: int, x, tol: float = MEMBER_TOL) -> np.ndarray:
        """Generator test: bounded least squares residual of ``x`` on the generators."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        G = self.leaf(k)
        out = np.empty(x.shape[0], dtype=bool)
        for i, v in enumerate(x):
            scale = 1.0 + np.abs(v).max()
            if G.shape[0] == 0:
                out[i] = np.abs(v).max() <= tol * scale
                continue
            coef = lsq_linear(G.T, v, bounds=(0.0, np.inf), method="bvls", tol=1e-14).x
            out[i] = np.linalg.norm(G.T @ coef - v) <= tol * scale
        return out

    def to_dict(self) -> dict:
        return {"generators": [g.tolist() for g in self.generators]}


def orthant(n: int, n_leaves: int = 1) -> RandomCone:
    return RandomCone(np.eye(n), n_leaves)


@dataclass
class ConeSelection:
    """One vector per leaf with its declared target (``"K"``, ``"ri K"``, ``"K°"``, ``"ri K°"``, ``"int K"``)."""

    values: np.ndarray
    target: str = "K"

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))

    def at(self, k: int) -> np.ndarray:
        return self.values[k if self.values.shape[0] > 1 else 0]

    def broadcast(self, n_leaves: int) -> np.ndarray:
        return np.broadcast_to(self.values, (n_leaves, self.values.shape[1])) if self.values.shape[0] == 1 else self.values

    def __add__(self, other):
        return ConeSelection(self.values + other.values, self.target)

    def __rmul__(self, a):
        return ConeSelection(a * self.values, self.target)


def ri_selection(cone: RandomCone) -> ConeSelection:
    """``rho = sum_k 2^-k g_k`` over the normalised generators, a point of ``ri K``."""
    rows = []
    for k in range(cone.n_leaves):
        G = cone.leaf(k)
        w = 2.0 ** -np.arange(1, G.shape[0] + 1)
        rows.append(w @ G if G.shape[0] else np.zeros(cone.n))
    return ConeSelection(np.array(rows), "ri K")


def castaing(cone: RandomCone, shifts=(2, 4, 8)) -> list:
    """Finite family of selections of ``K°`` whose conic hull is ``K°`` at every leaf.

    Polar generators, pairwise midpoints, and the relative-interior shifts
    ``rho/j + (1 - 1/j) phi`` for each generator selection ``phi``.
    """
    P = cone.polar()
    L = P.n_leaves
    counts = [P.leaf(k).shape[0] for k in range(L)]
    m = max(counts)
    if m == 0:
        return [ConeSelection(np.zeros((L, cone.n)), "K°")]
    base = []
    for i in range(m):
        base.append(ConeSelection(np.array([P.leaf(k)[i % counts[k]] if counts[k] else np.zeros(cone.n) for k in range(L)]), "K°"))
    out = list(base)
    for i, j in itertools.combinations(range(m), 2):
        out.append(ConeSelection(0.5 * (base[i].values + base[j].values), "K°"))
    rho = ri_selection(P)
    for j in shifts:
        for phi in base:
            out.append(ConeSelection(rho.values / j + (1.0 - 1.0 / j) * phi.values, "ri K°"))
    return out


def _facet_distances(cone: RandomCone, k: int, x: np.ndarray, within_span: bool) -> np.ndarray:
    F = cone.facets(k)
    if within_span:
        row, _ = _rank_basis(cone.leaf(k)) if cone.leaf(k).size else (np.zeros((0, cone.n)), None)
        proj = F @ row.T @ row
        norms = np.linalg.norm(proj, axis=1)
        keep = norms > 1e-12
        return (F[keep] @ x) / norms[keep]
    return F @ x


def interior_ball_radius(cone: RandomCone, point) -> np.ndarray:
    """Per-leaf ``r = min facet distance / 2``; the ball of radius ``r`` lies in ``K``.

    Raises :class:`NotInterior` unless the point is in the interior.
    """
    pts = point.broadcast(cone.n_leaves) if isinstance(point, ConeSelection) else np.atleast_2d(point)
    out = np.empty(cone.n_leaves)
    for k in range(cone.n_leaves):
        x = pts[k if pts.shape[0] > 1 else 0]
        if not cone.solid(k):
            raise NotInterior(f"cone at leaf {k} has empty interior")
        dist = _facet_distances(cone, k, x, False)
        r = dist.min() if dist.size else np.inf
        if not r > 0:
            raise NotInterior(f"point {x.tolist()} is not interior at leaf {k}")
        out[k] = 0.5 * r
    return out


def affine_ball_radius(cone: RandomCone, point) -> np.ndarray:
    """Per-leaf radius of a ball, intersected with ``span K``, that stays in ``K``.

    Facet normals are projected onto the span of the cone; normals
    orthogonal to it only encode the span and are skipped.
    """
    pts = point.broadcast(cone.n_leaves) if isinstance(point, ConeSelection) else np.atleast_2d(point)
    out = np.empty(cone.n_leaves)
    for k in range(cone.n_leaves):
        x = pts[k if pts.shape[0] > 1 else 0]
        G = cone.leaf(k)
        row = _rank_basis(G)[0] if G.size else np.zeros((0, cone.n))
        off = x - row.T @ (row @ x)
        if np.abs(off).max(initial=0.0) > MEMBER_TOL * (1.0 + np.abs(x).max()):
            raise NotRelativeInterior(f"point {x.tolist()} is outside the span at leaf {k}")
        dist = _facet_distances(cone, k, x, True)
        r = dist.min() if dist.size else np.inf
        if not r > 0:
            raise NotRelativeInterior(f"point {x.tolist()} is on the relative boundary at leaf {k}")
        out[k] = 0.5 * r
    return out


def in_relative_interior(cone: RandomCone, point) -> bool:
    try:
        affine_ball_radius(cone, point)
        return True
    except NotRelativeInterior:
        return False


@dataclass
class ConeOrderResult:
    holds: bool
    by_polar: bool
    by_generators: bool
    margins: np.ndarray


def cone_order(X, Y, cone: RandomCone, tol: float = MEMBER_TOL) -> ConeOrderResult:
    """``X - Y in K`` at every leaf, by polar inner products and by generator NNLS.

    ``margins[k]`` is the smallest ``<g, X - Y>`` over polar generators.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[-1] != cone.n or Y.shape[-1] != cone.n:
        raise ConeMismatch(f"vectors of length {X.shape[-1]}/{Y.shape[-1]} against a cone in R^{cone.n}")
    L = max(X.shape[0], Y.shape[0], cone.n_leaves)
    D = np.broadcast_to(X, (L, cone.n)) - np.broadcast_to(Y, (L, cone.n))
    by_polar = True
    by_gen = True
    margins = np.empty(L)
    for k in range(L):
        kk = k if cone.n_leaves > 1 else 0
        F = cone.facets(kk)
        margins[k] = (F @ D[k]).min() if F.shape[0] else np.inf
        by_polar &= bool(cone.contains(kk, D[k], tol)[0])
        by_gen &= bool(cone.contains_nnls(kk, D[k], 1e-7)[0])
    return ConeOrderResult(by_polar and by_gen, by_polar, by_gen, margins)


def cone_leq(X, Y, cone: RandomCone) -> bool:
    """``X`` dominates ``Y`` in the cone order, i.e. ``X - Y in K`` at every leaf.

    Raises :class:`ConeMismatch` if the polar and generator tests disagree.
    """
    res = cone_order(X, Y, cone)
    if res.by_polar != res.by_generators:
        raise ConeMismatch(f"polar test {res.by_polar} and generator test {res.by_generators} disagree")
    return res.holds


# ---------------------------------------------------------------------------
# scalarisation and vector no-arbitrage


def _scalar_product(Z: np.ndarray, V: np.ndarray) -> np.ndarray:
    bad = np.any(V == -np.inf, axis=-1)
    with np.errstate(invalid="ignore"):
        out = np.where(bad[..., None], 0.0, V)
    total = Z[..., 0] * out[..., 0]
    for i in range(1, V.shape[-1]):
        total = total + Z[..., i] * out[..., i]
    return np.where(bad, -np.inf, total)


class ScalarizedModel(MarketIntegrand):
    """``V_Z(omega, x) = <Z(omega), V(omega, x)>`` with ``<Z, -inf> = -inf``."""

    def __init__(self, model: VectorIntegrand, Z: ConeSelection):
        super().__init__(model.tree, model.d)
        self.model = model
        self.Z = Z.broadcast(model.tree.n_leaves)
        if self.Z.shape[1] != model.n:
            raise ConeMismatch(f"selection in R^{self.Z.shape[1]} for a model in R^{model.n}")
        self.positively_homogeneous = model.positively_homogeneous
        self.has_analytic_recession = model.has_analytic_recession
        self.name = f"scalarized({model.name})"

    def evaluate(self, leaves, X):
        leaves = np.asarray(leaves)
        return _scalar_product(self.Z[leaves], self.model.evaluate(leaves, X))

    def _recession_evaluate(self, leaves, X):
        leaves = np.asarray(leaves)
        return _scalar_product(self.Z[leaves], self.model._recession_evaluate(leaves, X))


def scalarize(model: VectorIntegrand, Z: ConeSelection, cone: RandomCone | None = None) -> ScalarizedModel:
    """Scalar model along ``Z``; with ``cone`` given, ``Z`` must lie in ``ri K°``."""
    if cone is not None:
        P = cone.for_tree(model.tree).polar()
        if not in_relative_interior(P, Z.broadcast(P.n_leaves)):
            raise TargetMismatch("selection is not in the relative interior of the polar cone")
    return ScalarizedModel(model, Z)


def _cone_margin(cone: RandomCone, V: np.ndarray) -> np.ndarray:
    """``min over leaves and polar generators of <g, V>`` for ``V`` of shape ``(m, L, n)``."""
    m, L, _ = V.shape
    out = np.full(m, np.inf)
    for k in range(L):
        F = cone.facets(k)
        if F.shape[0] == 0:
            continue
        Vk = V[:, k, :]
        bad = np.any(Vk == -np.inf, axis=1)
        with np.errstate(invalid="ignore"):
            vals = np.where(bad, -np.inf, (np.where(bad[:, None], 0.0, Vk) @ F.T).min(axis=1))
        out = np.minimum(out, vals)
    return out


@dataclass
class VectorNaConfig:
    family_size: int = 64
    sphere: SphereConfig = field(default_factory=SphereConfig)


def selection_family(cone: RandomCone, size: int = 64, seed: int = 0) -> list:
    """Selections of ``ri K°``: shifted polar generators plus random strictly positive combinations."""
    P = cone.polar()
    fam = [s for s in castaing(cone) if s.target == "ri K°"]
    rng = np.random.default_rng(seed)
    for _ in range(max(0, size - len(fam))):
        rows = []
        for k in range(P.n_leaves):
            G = P.leaf(k)
            rows.append(rng.uniform(0.1, 1.0, G.shape[0]) @ G if G.shape[0] else np.zeros(cone.n))
        fam.append(ConeSelection(np.array(rows), "ri K°"))
    return fam[:max(size, 1)]


def vector_na_check(model: VectorIntegrand, cone: RandomCone, cfg: VectorNaConfig | None = None) -> NaVerdict:
    """Vector no-arbitrage.

    Positively homogeneous models: search for ``theta != 0`` with
    ``V(theta) in K`` at every leaf.  Otherwise the recession models of
    the scalarisations along a finite ``ri K°`` family are searched jointly;
    the verdict is then tagged as depending on that family.
    """
    cfg = cfg or VectorNaConfig()
    tree = model.tree
    cone = cone.for_tree(tree)
    shape = (tree.n_decision, model.d)
    n = tree.n_decision * model.d
    if model.positively_homogeneous:
        def score(X):
            block = X.reshape((-1,) + shape)
            norms = np.abs(X).max(axis=1)
            with np.errstate(invalid="ignore", divide="ignore"):
                return np.where(norms > 0, _cone_margin(cone, model.hat(block)) / norms, -np.inf)
        meta = {"method": "cone_search"}
    else:
        if not model.has_analytic_recession:
            raise NoAnalyticForm(f"{model.name} has no analytic recession model")
        fam = selection_family(cone, cfg.family_size, cfg.sphere.seed)
        Zs = np.stack([z.broadcast(tree.n_leaves) for z in fam])

        class _Rec(VectorIntegrand):
            def evaluate(self_, leaves, X):
                return model._recession_evaluate(leaves, X)

        rec = _Rec(tree, model.d, model.n)

        def score(X):
            block = X.reshape((-1,) + shape)
            V = rec.hat(block)  # (m, L, n)
            norms = np.abs(X).max(axis=1)
            vals = np.stack([_scalar_product(Z[None], V).min(axis=1) for Z in Zs])
            with np.errstate(invalid="ignore", divide="ignore"):
                return np.where(norms > 0, vals.min(axis=0) / norms, -np.inf)
        meta = {"method": "scalarization_family", "family_size": len(fam)}

    x, margin, evals = sphere_search(score, n, cfg.sphere)
    meta.update({"evaluations": evals, "eps_cert": cfg.sphere.eps_cert})
    if margin >= -cfg.sphere.eps_cert:
        witness = AdaptedStrategy(tree, x.reshape(shape))
        if model.positively_homogeneous:
            V = model.hat(witness)
            meta["validated"] = bool(_cone_margin(cone, V[None])[0] >= -cfg.sphere.eps_cert)
        return NaVerdict(ARBITRAGE, witness, None, float(margin), meta)
    return NaVerdict(NA_UP_TO_SEARCH, None, None, float(margin), meta)


# ---------------------------------------------------------------------------
# Gram reconstruction


class GramReconstruction(VectorIntegrand):
    """``V(omega, x) = sum_k alpha_k Z_k(omega)`` with ``[<Z_i, Z_j>] alpha = [V_{Z_i}]``.

    ``basis[k]`` lists the indices of the selections used at leaf ``k``;
    ``dims[k]`` is the dimension of ``span K°`` there.
    """

    def __init__(self, reps, cone: RandomCone, basis=None):
        tree = reps[0][1].tree
        super().__init__(tree, reps[0][1].d, cone.n)
        self.cone = cone.for_tree(tree)
        self.Zs = np.stack([Z.broadcast(tree.n_leaves) for Z, _ in reps])  # (K, L, n)
        self.models = [m for _, m in reps]
        P = self.cone.polar()
        self.dims = [P.dimension(k) for k in range(tree.n_leaves)]
        self.basis = []
        self.gram_inv = []
        for k in range(tree.n_leaves):
            idx = list(basis[k] if basis is not None else self._greedy(k))
            B = self.Zs[idx, k, :]
            if len(idx) != self.dims[k] or (len(idx) and np.linalg.matrix_rank(B, tol=RANK_TOL) < len(idx)):
                raise SingularGram(f"leaf {tree.leaf_ids[k]!r}: basis {idx} does not span the polar cone")
            self.basis.append(idx)
            self.gram_inv.append(np.linalg.inv(B @ B.T) if idx else np.zeros((0, 0)))
        self.positively_homogeneous = all(m.positively_homogeneous for m in self.models)
        self.name = "gram"

    def _greedy(self, k: int) -> list:
        chosen = []
        for i in range(self.Zs.shape[0]):
            trial = chosen + [i]
            if np.linalg.matrix_rank(self.Zs[trial, k, :], tol=RANK_TOL) == len(trial):
                chosen = trial
            if len(chosen) == self.dims[k]:
                break
        return chosen

    def evaluate(self, leaves, X):
        leaves = np.asarray(leaves)
        X = np.asarray(X, dtype=float)
        S = np.stack([m.evaluate(leaves, X) for m in self.models], axis=1)  # (rows, K)
        out = np.zeros((leaves.size, self.n))
        for k in np.unique(leaves):
            rows = leaves == k
            idx = self.basis[k]
            if not idx:
                continue
            alpha = S[rows][:, idx] @ self.gram_inv[k].T
            out[rows] = alpha @ self.Zs[idx, k, :]
        bad = np.any(S == -np.inf, axis=1)
        out[bad] = -np.inf
        return out

    def metadata(self) -> dict:
        return {"basis": {self.tree.leaf_ids[k]: b for k, b in enumerate(self.basis)},
                "dims": {self.tree.leaf_ids[k]: d for k, d in enumerate(self.dims)}}


def gram_residual(recon: GramReconstruction, grid) -> float:
    """Largest ``|<Z, V_rec> - V_Z|`` over every supplied selection, leaf and grid point."""
    X = np.asarray(grid, dtype=float).reshape(-1, recon.dim)
    V = recon.everywhere(X)  # (m, L, n)
    worst = 0.0
    for i, m in enumerate(recon.models):
        want = m.everywhere(X)
        got = _scalar_product(recon.Zs[i][None], V)
        fin = np.isfinite(want)
        if np.any(np.isfinite(got) != fin):
            return np.inf
        if fin.any():
            worst = max(worst, float(np.max(np.abs(got[fin] - want[fin]))))
    return worst


def gram_reconstruct(reps, cone: RandomCone, grid=None, basis=None, tol: float = 1e-8) -> GramReconstruction:
    """Recover a vector model from ``(selection, scalar model)`` pairs.

    With ``grid`` given, every supplied scalarisation is checked against
    the reconstruction; a residual above ``tol`` raises
    :class:`InconsistentScalarizations`.
    """
    recon = GramReconstruction(reps, cone, basis)
    if grid is not None:
        res = gram_residual(recon, grid)
        if res > tol:
            raise InconsistentScalarizations(f"scalarisations are not jointly representable (residual {res:.3g})")
    return recon


def superadditivity_gap(build, Z1: ConeSelection, Z2: ConeSelection, grid) -> float:
    """Largest ``V_{Z1} + V_{Z2} - V_{Z1+Z2}`` over the grid for scalar models from ``build(Z)``."""
    X = np.asarray(grid, dtype=float)
    a, b, c = build(Z1), build(Z2), build(Z1 + Z2)
    X = X.reshape(-1, a.dim)
    with np.errstate(invalid="ignore"):
        gap = a.everywhere(X) + b.everywhere(X) - c.everywhere(X)
    gap = gap[np.isfinite(gap)]
    return float(gap.max()) if gap.size else 0.0


# ---------------------------------------------------------------------------
# vector superhedging


def vector_superhedge_feasible(model: VectorIntegrand, cone: RandomCone, h, box=1.0, grid=11,
                               tol: float = MEMBER_TOL, budget: int = 10**6):
    """``(True, witness)`` for the first grid strategy with ``V(theta) - h in K`` at every leaf."""
    tree = model.tree
    cone = cone.for_tree(tree)
    h = np.broadcast_to(np.asarray(h, dtype=float), (tree.n_leaves, cone.n))
    G = strategy_grid(model, box, grid)
    for block in iter_adapted_grid_batches(tree, G, budget):
        V = model.hat(block)
        with np.errstate(invalid="ignore"):
            margin = _cone_margin(cone, V - h[None])
        ok = np.flatnonzero(margin >= -tol)
        if ok.size:
            return True, AdaptedStrategy(tree, block[ok[0]])
    return False, None


def lower_element(cone: RandomCone, x, bound: float) -> np.ndarray:
    """``g = -(bound / r) x`` with ``r`` the interior radius at ``x``.

    Every ``y`` with ``|y| <= bound`` then satisfies ``y - g in K``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r = interior_ball_radius(cone, x)
    xs = np.broadcast_to(x, (cone.n_leaves, cone.n))
    return -(bound / r)[:, None] * xs
