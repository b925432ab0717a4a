"""JSON model files: schema, loading and model construction.

A model file holds a tree, a model description and optional cone, claim,
utility and numeric configuration.  Validation errors name the offending
field (and line/column for JSON syntax errors).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .cones import RandomCone
from .errors import SchemaError
from .models import (BoxConstraint, FixedCost, FunctionModel, ProportionalCost, additive_costs,
                     consumption_model, kabanov_model, limit_order_book, two_state_model)
from .tree import build_tree

DEFAULT_CONFIG = {
    "seed": 0,
    "tol": 1e-9,
    "grid": 101,
    "box": 1.0,
    "budget": 1_000_000,
    "points": 41,
    "depth": 8,
    "samples": 200,
}

_number = {"type": "number"}
_vector = {"oneOf": [_number, {"type": "array", "items": _number, "minItems": 1}]}
_box_pair = {"type": "array", "items": _vector, "minItems": 2, "maxItems": 2}
_steps = {"type": "array", "items": {"type": "integer", "minimum": 0}}

SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["model"],
    "additionalProperties": False,
    "properties": {
        "description": {"type": "string"},
        "example": {
            "type": "object",
            "required": ["command", "exit"],
            "properties": {"command": {"type": "string"}, "args": {"type": "array", "items": {"type": "string"}},
                           "exit": {"type": "integer"}},
            "additionalProperties": False,
        },
        "tree": {
            "type": "object",
            "required": ["nodes"],
            "additionalProperties": False,
            "properties": {
                "nodes": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["id", "time", "parent"],
                        "additionalProperties": False,
                        "properties": {
                            "id": {"type": "string"},
                            "time": {"type": "integer", "minimum": 0},
                            "parent": {"type": ["string", "null"]},
                            "prob": _number,
                        },
                    },
                }
            },
        },
        "model": {
            "type": "object",
            "required": ["type"],
            "additionalProperties": False,
            "properties": {
                "type": {"enum": ["frictionless", "additive", "lob", "consumption", "two_state", "kabanov", "zero"]},
                "prices": {"type": "object", "additionalProperties": _vector},
                "costs": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["kind"],
                        "additionalProperties": False,
                        "properties": {
                            "kind": {"enum": ["proportional", "fixed", "constraint"]},
                            "rate": {"oneOf": [_number, {"type": "object", "additionalProperties": _number}]},
                            "fee": _number,
                            "boxes": {"type": "array", "items": _box_pair, "minItems": 1},
                            "steps": _steps,
                        },
                    },
                },
                "kappa": _number,
                "depth": _number,
                "p": _number,
                "initial_wealth": _number,
                "weights": {"type": "array", "items": _number},
                "transfer_costs": {"oneOf": [_number, {"type": "array"}]},
                "allow_negative": {"type": "boolean"},
                "d": {"type": "integer", "minimum": 1},
            },
        },
        "cone": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "generators": {"type": "array", "items": {"type": "array", "items": _number}},
                "per_leaf": {"type": "object", "additionalProperties": {"type": "array", "items": {"type": "array", "items": _number}}},
            },
        },
        "claim": {"type": "object", "additionalProperties": _vector},
        "utility": {"type": "string", "pattern": "^(linear|log|exp(:[0-9.eE+-]+)?|digital(:[0-9.eE+-]+)?)$"},
        "config": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "seed": {"type": "integer", "minimum": 0},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "grid": {"type": "integer", "minimum": 1},
                "box": {"type": "number", "exclusiveMinimum": 0},
                "budget": {"type": "integer", "minimum": 1},
                "points": {"type": "integer", "minimum": 2},
                "depth": {"type": "integer", "minimum": 1},
                "samples": {"type": "integer", "minimum": 1},
            },
        },
    },
}


@dataclass
class ModelFile:
    raw: dict
    tree: object
    model: object
    cone: RandomCone | None
    claim: np.ndarray | None
    utility: str | None
    config: dict = field(default_factory=dict)
    path: str | None = None


def _field(path) -> str:
    return ".".join(str(p) for p in path) or "<root>"


def parse_json(text: str, source: str = "<model>") -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def validate_dict(raw: dict, source: str = "<model>") -> None:
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = [f"{source}: field {_field(e.absolute_path)}: {e.message}" for e in errors[:10]]
        raise SchemaError("\n".join(lines))


def _costs(specs) -> list:
    out = []
    for c in specs or []:
        steps = c.get("steps")
        if c["kind"] == "proportional":
            out.append(ProportionalCost(c.get("rate", 0.0), steps))
        elif c["kind"] == "fixed":
            out.append(FixedCost(c.get("fee", 0.0), steps))
        else:
            out.append(BoxConstraint([tuple(b) for b in c["boxes"]], steps))
    return out


def _require(spec: dict, key: str, source: str):
    if key not in spec:
        raise SchemaError(f"{source}: field model.{key}: required for model type {spec['type']!r}")
    return spec[key]


def build_model(raw: dict, tree, source: str = "<model>"):
    spec = raw["model"]
    kind = spec["type"]
    if kind == "two_state":
        return two_state_model(spec.get("p", 0.5))
    if tree is None:
        raise SchemaError(f"{source}: field tree: required for model type {kind!r}")
    missing = [n for n in spec.get("prices", {}) if n not in tree._index]
    if missing:
        raise SchemaError(f"{source}: field model.prices: unknown node ids {missing}")
    if kind in ("frictionless", "additive"):
        return additive_costs(tree, _require(spec, "prices", source), _costs(spec.get("costs")), spec.get("d"))
    if kind == "lob":
        return limit_order_book(tree, _require(spec, "prices", source), _require(spec, "kappa", source),
                                _require(spec, "depth", source))
    if kind == "consumption":
        return consumption_model(tree, _require(spec, "prices", source), None, spec.get("initial_wealth", 1.0),
                                 spec.get("weights"))
    if kind == "kabanov":
        return kabanov_model(tree, _require(spec, "prices", source), spec.get("transfer_costs", 0.0),
                             spec.get("allow_negative", True))
    d = spec.get("d", 1)
    return FunctionModel(tree, d, lambda leaves, X: np.zeros(np.shape(X)[0]), positively_homogeneous=True,
                         recession=lambda leaves, X: np.zeros(np.shape(X)[0]), name="zero")


def build_cone(raw: dict, tree, n: int | None, source: str = "<model>"):
    spec = raw.get("cone")
    if spec is None:
        return None
    if "per_leaf" in spec:
        missing = [k for k in tree.leaf_ids if k not in spec["per_leaf"]]
        if missing:
            raise SchemaError(f"{source}: field cone.per_leaf: missing leaves {missing}")
        return RandomCone([np.asarray(spec["per_leaf"][k], dtype=float).reshape(-1, n) for k in tree.leaf_ids], n=n)
    return RandomCone(np.asarray(spec.get("generators", []), dtype=float).reshape(-1, n), tree.n_leaves, n=n)


def claim_vector(tree, mapping: dict, source: str = "<model>") -> np.ndarray:
    unknown = [k for k in mapping if k not in tree.leaf_ids]
    missing = [k for k in tree.leaf_ids if k not in mapping]
    if unknown or missing:
        raise SchemaError(f"{source}: field claim: unknown leaves {unknown}, missing leaves {missing}")
    return np.array([np.asarray(mapping[k], dtype=float) for k in tree.leaf_ids])


def read_claim_csv(path, tree) -> np.ndarray:
    """Claim table with header ``leaf_id,value[,value...]``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "leaf_id":
        raise SchemaError(f"{path}: line 1: header must start with leaf_id")
    mapping = {}
    for lineno, row in enumerate(rows[1:], start=2):
        try:
            vals = [float(v) for v in row[1:]]
        except ValueError:
            raise SchemaError(f"{path}: line {lineno}: non-numeric claim value") from None
        mapping[row[0]] = vals[0] if len(vals) == 1 else vals
    return claim_vector(tree, mapping, str(path))


def load_dict(raw: dict, source: str = "<model>") -> ModelFile:
    validate_dict(raw, source)
    tree = None
    if "tree" in raw:
        try:
            tree = build_tree(raw["tree"])
        except Exception as exc:
            raise SchemaError(f"{source}: field tree: {exc}") from None
    try:
        model = build_model(raw, tree, source)
    except SchemaError:
        raise
    except Exception as exc:
        raise SchemaError(f"{source}: field model: {exc}") from None
    tree = model.tree
    cone = build_cone(raw, tree, getattr(model, "n", None) or _cone_dim(raw), source)
    claim = claim_vector(tree, raw["claim"], source) if "claim" in raw else None
    config = dict(DEFAULT_CONFIG)
    config.update(raw.get("config", {}))
    return ModelFile(raw, tree, model, cone, claim, raw.get("utility"), config, source)


def _cone_dim(raw: dict):
    spec = raw.get("cone") or {}
    gens = spec.get("generators") or next(iter(spec.get("per_leaf", {}).values()), [])
    return len(gens[0]) if gens else None


def load_model_file(path) -> ModelFile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SchemaError(f"{path}: {exc.strerror}") from None
    return load_dict(parse_json(text, str(path)), str(path))


def bundled_examples() -> list:
    """Names of the example model files shipped with the package."""
    root = resources.files("treemarkets") / "data"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("treemarkets") / "data" / f"{name}.json"))


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, non-finite floats as strings."""
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v
