"""Command line front end.

Every command reads a JSON model file (``--model PATH`` or
``--model bundled:NAME``), prints a short summary (or JSON with
``--json``) and, with ``--out DIR``, writes CSV/JSON artifacts.  Exit codes:
0 success, 2 negative verdict (arbitrage found, axiom or cross-check
failed), 1 error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .arbitrage import ARBITRAGE, NA_CERTIFIED, SphereConfig, check_na
from .cones import (VectorNaConfig, affine_ball_radius, ri_selection, vector_na_check,
                    vector_superhedge_feasible)
from .errors import SchemaError, TreeMarketError
from .models import VectorIntegrand
from .recession import cross_validate_recession, default_grid, recession_numeric
from .representation import build_grid, check_axioms, model_table, reconstruct_integrand
from .superhedging import superhedge_price
from .utility import maximize_utility, parse_utility

COMMANDS = ("validate", "check-axioms", "reconstruct", "recession", "check-na", "superhedge",
            "maximize-utility", "cone-check")


class Outcome:
    def __init__(self, lines, data, artifacts=None, code=0):
        self.lines = lines
        self.data = data
        self.artifacts = artifacts or {}
        self.code = code


def _config(mf: io.ModelFile, args) -> dict:
    cfg = dict(mf.config)
    for key in ("seed", "tol", "grid", "box", "budget"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _strategy_rows(strategy):
    return [list(r) for r in strategy.as_rows()]


def _strategy_header(d):
    return ["node_id"] + [f"theta_{i + 1}" for i in range(d)]


def cmd_validate(mf, cfg, args):
    tree, model = mf.tree, mf.model
    data = {
        "model": model.name,
        "nodes": tree.n_nodes,
        "leaves": tree.n_leaves,
        "T": tree.T,
        "d": model.d,
        "cone": mf.cone is not None,
        "claim": mf.claim is not None,
        "utility": mf.utility,
        "config": cfg,
    }
    lines = [f"valid model file: {model.name}, {tree.n_nodes} nodes, {tree.n_leaves} leaves, T={tree.T}, d={model.d}"]
    return Outcome(lines, data, {"summary.json": io.dumps(data)})


def cmd_check_axioms(mf, cfg, args):
    rep = check_axioms(mf.model, int(cfg["samples"]), int(cfg["seed"]))
    data = {"passed": rep.passed, "a1": rep.a1_pass, "a2": rep.a2_pass, "a1_failures": rep.a1_failures,
            "a2_failures": rep.a2_failures, "pairs": rep.pairs_checked, "samples_per_pair": rep.samples_per_pair}
    lines = [f"A1 {'pass' if rep.a1_pass else 'FAIL'}; A2 {'pass' if rep.a2_pass else 'FAIL'} "
             f"over {rep.pairs_checked} (t, atom) pairs x {rep.samples_per_pair} samples"]
    return Outcome(lines, data, {"axioms.json": io.dumps(data)}, 0 if rep.passed else 2)


def cmd_reconstruct(mf, cfg, args):
    model = mf.model
    points = int(args.grid) if args.grid is not None else int(cfg["points"])
    if points ** model.dim > int(cfg["budget"]):
        raise TreeMarketError(f"lattice of {points}^{model.dim} points exceeds the budget")
    grid = build_grid(model, float(cfg["box"]), points, int(cfg["depth"]))
    rec = reconstruct_integrand(model, grid)
    truth = model_table(model, grid.lattice)
    with np.errstate(invalid="ignore"):
        err = np.where(truth == rec.values, 0.0, np.abs(truth - rec.values))
    ids = model.tree.leaf_ids
    rows = []
    for i, x in enumerate(grid.lattice):
        for k in range(model.tree.n_leaves):
            rows.append([ids[k], *x, truth[i, k], rec.values[i, k], err[i, k]])
    header = ["leaf_id"] + [f"x_{j + 1}" for j in range(model.dim)] + ["model", "reconstructed", "abs_error"]
    data = {"max_error": float(np.nanmax(err)), "lattice_points": int(grid.lattice.shape[0]), "depth": int(cfg["depth"])}
    lines = [f"reconstruction on {grid.lattice.shape[0]} lattice points: max error {data['max_error']:.3e}"]
    return Outcome(lines, data, {"reconstruct.csv": io.csv_text(header, rows), "reconstruct.json": io.dumps(data)})


def cmd_recession(mf, cfg, args):
    model = mf.model
    grid = default_grid(model.dim, 21, int(cfg["seed"]))
    header = ["leaf_id"] + [f"z_{j + 1}" for j in range(model.dim)] + ["analytic", "numeric_lower", "numeric_upper", "class"]
    if model.has_analytic_recession:
        rep = cross_validate_recession(model, grid)
        data = {"passed": rep.passed, "max_gap": rep.max_gap, "class_mismatches": rep.class_mismatches,
                "homogeneity_error": rep.homogeneity_error}
        lines = [f"recession cross-check {'pass' if rep.passed else 'FAIL'}: max gap {rep.max_gap:.3e}, "
                 f"{len(rep.class_mismatches)} classification mismatches"]
        return Outcome(lines, data, {"recession.csv": io.csv_text(header, rep.rows), "recession.json": io.dumps(data)},
                       0 if rep.passed else 2)
    rows = []
    ids = model.tree.leaf_ids
    for z in grid:
        est = recession_numeric(model, z)
        for k in range(model.tree.n_leaves):
            rows.append([ids[k], *z, "", est.lower[k], est.upper[k], est.classification[k]])
    data = {"passed": None, "analytic": False, "points": int(grid.shape[0])}
    lines = [f"numeric recession on {grid.shape[0]} points (no analytic form to compare)"]
    return Outcome(lines, data, {"recession.csv": io.csv_text(header, rows), "recession.json": io.dumps(data)})


def cmd_check_na(mf, cfg, args):
    model = mf.model
    sphere = SphereConfig(seed=int(cfg["seed"]), budget=max(int(cfg["budget"]), 1))
    if args.vector:
        if mf.cone is None or not isinstance(model, VectorIntegrand):
            raise SchemaError("check-na --vector needs a vector model and a cone")
        verdict = vector_na_check(model, mf.cone, VectorNaConfig(sphere=sphere))
    else:
        if isinstance(model, VectorIntegrand):
            raise SchemaError("vector models need check-na --vector")
        verdict = check_na(model, sphere)
    data = verdict.to_dict()
    arts = {"verdict.json": io.dumps(data)}
    lines = [f"status: {verdict.status}"]
    if verdict.margin is not None:
        lines.append(f"margin: {verdict.margin:.6g}")
    if verdict.witness is not None:
        arts["witness.csv"] = io.csv_text(_strategy_header(verdict.witness.d), _strategy_rows(verdict.witness))
        for row in _strategy_rows(verdict.witness):
            lines.append(f"witness {row[0]}: {' '.join(f'{v:.6g}' for v in row[1:])}")
    if verdict.status == NA_CERTIFIED:
        rows = [[nid, c, w] for nid, cert in verdict.certificate.items() for c, w in zip(cert["children"], cert["weights"])]
        arts["certificate.csv"] = io.csv_text(["node_id", "child_id", "weight"], rows)
        for nid, cert in verdict.certificate.items():
            lines.append(f"node {nid}: weights {' '.join(f'{w:.6f}' for w in cert['weights'])}, rank {cert['rank']}")
    elif verdict.certificate:
        lines.append(f"certificate: {verdict.certificate.get('argument', verdict.certificate)}")
    return Outcome(lines, data, arts, 2 if verdict.status == ARBITRAGE else 0)


def _claim(mf, args):
    if args.claim:
        return io.read_claim_csv(args.claim, mf.tree)
    if mf.claim is None:
        raise SchemaError("superhedge needs a claim (model file 'claim' or --claim CSV)")
    return mf.claim


def cmd_superhedge(mf, cfg, args):
    model = mf.model
    f = _claim(mf, args)
    box, grid = float(cfg["box"]), int(cfg["grid"])
    ids = model.tree.leaf_ids
    if isinstance(model, VectorIntegrand):
        if mf.cone is None:
            raise SchemaError("vector superhedging needs a cone")
        ok, wit = vector_superhedge_feasible(model, mf.cone, f, box, grid, budget=int(cfg["budget"]))
        data = {"feasible": ok}
        arts = {"result.json": io.dumps(data)}
        if wit is not None:
            arts["witness.csv"] = io.csv_text(_strategy_header(wit.d), _strategy_rows(wit))
        return Outcome([f"claim superhedgeable in the cone order: {'yes' if ok else 'no'}"], data, arts)
    res = superhedge_price(model, f, box, grid, int(cfg["budget"]))
    V = np.asarray(model.hat(res.witness), dtype=float)
    gap = res.grid_gap
    data = {"price": res.price, "price_lower": res.price_lower, "grid_gap": gap, "box": box, "grid": grid,
            "method": res.metadata["method"], "witness": {r[0]: list(r[1:]) for r in _strategy_rows(res.witness)}}
    gap_txt = f"{gap:.6f}" if gap is not None else "n/a"
    lines = [f"price {res.price:.6f} (grid gap {gap_txt})"]
    for row in _strategy_rows(res.witness):
        lines.append(f"witness {row[0]}: {' '.join(f'{v:.6g}' for v in row[1:])}")
    slack_rows = [[ids[k], f[k], V[k], res.slack[k]] for k in range(len(ids))]
    arts = {
        "result.json": io.dumps(data),
        "witness.csv": io.csv_text(_strategy_header(model.d), _strategy_rows(res.witness)),
        "slack.csv": io.csv_text(["leaf_id", "claim", "outcome", "slack"], slack_rows),
    }
    return Outcome(lines, data, arts)


def cmd_maximize_utility(mf, cfg, args):
    spec = args.utility or mf.utility or "linear"
    U = parse_utility(spec)
    res = maximize_utility(mf.model, U, float(cfg["box"]), int(cfg["grid"]), int(cfg["budget"]))
    data = {"utility": spec, "value": res.value, "method": res.metadata.get("method"),
            "witness": {r[0]: list(r[1:]) for r in _strategy_rows(res.witness)}}
    lines = [f"optimal expected utility ({spec}): {res.value:.6g}"]
    for row in _strategy_rows(res.witness):
        lines.append(f"witness {row[0]}: {' '.join(f'{v:.6g}' for v in row[1:])}")
    arts = {"result.json": io.dumps(data),
            "witness.csv": io.csv_text(_strategy_header(mf.model.d), _strategy_rows(res.witness))}
    return Outcome(lines, data, arts)


def cmd_cone_check(mf, cfg, args):
    if mf.cone is None:
        raise SchemaError("cone-check needs a 'cone' entry")
    cone = mf.cone.for_tree(mf.tree)
    polar = cone.polar()
    rho = ri_selection(cone)
    rho_polar = ri_selection(polar)
    radius = affine_ball_radius(cone, rho)
    radius_polar = affine_ball_radius(polar, rho_polar)
    ids = mf.tree.leaf_ids
    data = {"leaves": {}}
    rows = []
    lines = []
    for k, lid in enumerate(ids):
        entry = {
            "generators": cone.leaf(k), "polar_generators": polar.leaf(k), "dim": cone.dimension(k),
            "polar_dim": polar.dimension(k), "ri_selection": rho.at(k), "ri_radius": radius[k],
            "polar_ri_selection": rho_polar.at(k), "polar_ri_radius": radius_polar[k],
        }
        data["leaves"][lid] = entry
        rows.append([lid, "K", *rho.at(k), radius[k]])
        rows.append([lid, "polar", *rho_polar.at(k), radius_polar[k]])
        lines.append(f"leaf {lid}: dim K={entry['dim']}, dim K°={entry['polar_dim']}, "
                     f"{polar.leaf(k).shape[0]} polar generators, ri radius {radius[k]:.6g}")
    header = ["leaf_id", "cone"] + [f"v_{j + 1}" for j in range(cone.n)] + ["radius"]
    return Outcome(lines, data, {"cone.json": io.dumps(data), "selections.csv": io.csv_text(header, rows)})


HANDLERS = {
    "validate": cmd_validate,
    "check-axioms": cmd_check_axioms,
    "reconstruct": cmd_reconstruct,
    "recession": cmd_recession,
    "check-na": cmd_check_na,
    "superhedge": cmd_superhedge,
    "maximize-utility": cmd_maximize_utility,
    "cone-check": cmd_cone_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="treemarkets", description="Market models on finite scenario trees.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--model", required=True, help="model file, or bundled:NAME")
        p.add_argument("--out", help="directory for CSV/JSON artifacts")
        p.add_argument("--seed", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--grid", type=int)
        p.add_argument("--box", type=float)
        p.add_argument("--budget", type=int)
        p.add_argument("--json", action="store_true", help="print the machine-readable result")
        if name == "check-na":
            p.add_argument("--vector", action="store_true", help="vector no-arbitrage in the cone order")
        if name == "superhedge":
            p.add_argument("--claim", help="CSV with header leaf_id,value")
        if name == "maximize-utility":
            p.add_argument("--utility", help="linear | exp:a | log | digital:k")
    return parser


def resolve_model_path(spec: str) -> Path:
    if spec.startswith("bundled:"):
        name = spec.split(":", 1)[1]
        if name not in io.bundled_examples():
            raise SchemaError(f"no bundled example named {name!r}; available: {', '.join(io.bundled_examples())}")
        return io.bundled_path(name)
    return Path(spec)


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    for flag in ("vector", "claim", "utility"):
        if not hasattr(args, flag):
            setattr(args, flag, None)
    try:
        mf = io.load_model_file(resolve_model_path(args.model))
        cfg = _config(mf, args)
        out = HANDLERS[args.command](mf, cfg, args)
    except (TreeMarketError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=stderr)
        return 1
    if args.json:
        stdout.write(io.dumps(out.data))
    else:
        for line in out.lines:
            print(line, file=stdout)
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        for name, text in sorted(out.artifacts.items()):
            (outdir / name).write_text(text)
    return out.code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
