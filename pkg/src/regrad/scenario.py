"""Scenario files: JSON in, validated ``Scenario`` out."""
from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .analysis import RULES, get_rule
from .errors import DependencyError, ParseError, SchemaError
from .theory import Sampler, Theory

TASKS = ("representation", "combinator", "associativity", "regraduation", "additivity")
REQUIRES = {
    "combinator": "representation",
    "associativity": "combinator",
    "regraduation": "representation",
    "additivity": "regraduation",
}

DEFAULT_TOLERANCES = {
    "representation": 1e-9,   # single-slit agreement for witnesses
    "key": 1e-9,              # combinator table key matching
    "identify": 1e-10,        # closed-form recognition of a fitted table
    "associativity": 1e-9,
    "regraduation": 1e-6,     # feasibility of anchored xi
    "triviality": 1e-8,       # sup-norm below which xi counts as zero
    "merge": 1e-10,           # amplitude deduplication in constraint systems
}
# additivity defaults to 10x the regraduation tolerance (held-out check)

DEFAULT_SAMPLES = {"representation": 10000, "combinator": 10000, "holdout": 1000, "triples": 1000}
DEFAULT_REGRADUATION = {"grid": 1601, "alpha_grid": [0.25, 0.5, 1.0, 2.0]}

_LABEL = re.compile(r"^[A-Za-z0-9']+$")

_NUMBER = {"type": "number"}
_COMPLEX = {
    "oneOf": [
        _NUMBER,
        {"type": "object", "required": ["re", "im"], "additionalProperties": False,
         "properties": {"re": _NUMBER, "im": _NUMBER}},
    ]
}

SCHEMA = {
    "type": "object",
    "required": ["slits", "theory", "sampler"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "slits": {"type": "array", "items": {"type": "string", "minLength": 1}, "minItems": 2},
        "pair": {"type": "array", "items": {"type": "string"}, "minItems": 2, "maxItems": 2},
        "theory": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["linear", "quadratic", "power", "user_table"]},
                "p": {"type": "integer", "minimum": 1},
                "rule": {"enum": sorted(RULES)},
                "grid": {"type": "array", "items": _COMPLEX, "minItems": 1},
                "table": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["config", "coeffs", "value"],
                        "additionalProperties": False,
                        "properties": {
                            "config": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                            "coeffs": {"type": "array", "items": _COMPLEX},
                            "value": _COMPLEX,
                        },
                    },
                },
            },
        },
        "sampler": {
            "type": "object",
            "required": ["kind", "seed"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["complex-gaussian", "real-uniform", "grid"]},
                "seed": {"type": "integer", "minimum": 0},
                "sigma": {"type": "number", "exclusiveMinimum": 0},
                "lo": _NUMBER,
                "hi": _NUMBER,
                "points": {"type": "array", "items": _COMPLEX, "minItems": 1},
            },
        },
        "samples": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": "integer", "minimum": 1} for k in DEFAULT_SAMPLES},
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": "number", "exclusiveMinimum": 0}
                           for k in [*DEFAULT_TOLERANCES, "additivity"]},
        },
        "regraduation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "domain": {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2},
                "grid": {"type": "integer", "minimum": 3},
                "anchor": _NUMBER,
                "alpha_grid": {"type": "array", "items": _NUMBER, "minItems": 1},
            },
        },
        "tasks": {"type": "array", "items": {"enum": list(TASKS)}, "uniqueItems": True},
    },
}


def to_complex(v) -> complex:
    if isinstance(v, dict):
        return complex(v["re"], v["im"])
    return complex(v)


def complex_json(z) -> dict:
    z = complex(z)
    # +0.0 folds negative zeros so equal values serialize identically
    return {"re": z.real + 0.0, "im": z.imag + 0.0}


@dataclass
class Scenario:
    slits: list[str]
    pair: tuple[str, str]
    theory: Theory
    sampler: Sampler
    tolerances: dict[str, float]
    samples: dict[str, int]
    regraduation: dict
    tasks: list[str]
    name: str = ""
    raw: dict = field(default_factory=dict)

    def echo(self) -> dict:
        """Normalized scenario with every default filled in."""
        return copy.deepcopy(self.raw)


def load_scenario(path) -> Scenario:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(path, e.lineno, e.colno, e.msg) from None
    return scenario_from_dict(data, default_name=path.stem)


def scenario_from_dict(data: dict, default_name: str = "") -> Scenario:
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise SchemaError(where, e.message) from None
    data = copy.deepcopy(data)

    slits = data["slits"]
    for s in slits:
        if not _LABEL.match(s) or s == "v":
            raise SchemaError("slits", f"{s!r} is not a valid slit label")
    if len(set(slits)) != len(slits):
        raise SchemaError("slits", "labels must be unique")
    pair = tuple(data.get("pair", slits[:2]))
    if pair[0] == pair[1] or any(p not in slits for p in pair):
        raise SchemaError("pair", "must name two distinct slits of the scenario")

    tasks = data.get("tasks", list(TASKS))
    for i, t in enumerate(tasks):
        need = REQUIRES.get(t)
        if need and need not in tasks[:i]:
            raise DependencyError(f"task {t!r} requires {need!r} earlier in the task list")

    theory = _theory(data["theory"], pair)
    sampler = _sampler(data["sampler"])

    tol = {**DEFAULT_TOLERANCES, **data.get("tolerances", {})}
    tol.setdefault("additivity", 10 * tol["regraduation"])
    samples = {**DEFAULT_SAMPLES, **data.get("samples", {})}
    regrad = {**copy.deepcopy(DEFAULT_REGRADUATION), **data.get("regraduation", {})}
    if "domain" in regrad and not regrad["domain"][0] < regrad["domain"][1]:
        raise SchemaError("regraduation/domain", "lower end must be below upper end")

    name = data.get("name", default_name)
    raw = {**data, "name": name, "pair": list(pair), "tasks": tasks, "tolerances": tol,
           "samples": samples, "regraduation": regrad}
    return Scenario(slits, pair, theory, sampler, tol, samples, regrad, tasks, name, raw)


def _theory(cfg: dict, pair) -> Theory:
    kind = cfg["kind"]
    if kind == "linear":
        return Theory.linear()
    if kind == "quadratic":
        return Theory.quadratic()
    if kind == "power":
        if "p" not in cfg:
            raise SchemaError("theory/p", "power theory needs an exponent p")
        return Theory.power(cfg["p"])
    entries = [(e["config"], [to_complex(c) for c in e["coeffs"]], to_complex(e["value"]))
               for e in cfg.get("table", [])]
    rule = cfg.get("rule")
    if rule:
        if "grid" not in cfg:
            raise SchemaError("theory/grid", "a rule-generated table needs a grid")
        entries += surrogate_entries(get_rule(rule), [to_complex(g) for g in cfg["grid"]], pair)
    if not entries:
        raise SchemaError("theory/table", "user_table needs table entries or a rule with a grid")
    try:
        return Theory.user_table(entries, rule=rule)
    except ValueError as e:
        raise SchemaError("theory/table", str(e)) from None


def surrogate_entries(rule, grid, pair):
    """Table rows making phi(a)=x, phi(a')=y, phi(a v a')=S(x, y) on grid x grid."""
    a, b = pair
    out = []
    for x in grid:
        out.append(([a], [x], x))
        out.append(([b], [x], x))
        for y in grid:
            out.append(([a, b] if a < b else [b, a], [x, y] if a < b else [y, x], rule(x, y)))
    return out


def _sampler(cfg: dict) -> Sampler:
    kw = {k: cfg[k] for k in ("sigma", "lo", "hi") if k in cfg}
    if "points" in cfg:
        kw["points"] = tuple(to_complex(p) for p in cfg["points"])
    try:
        return Sampler(cfg["kind"], seed=cfg["seed"], **kw)
    except Exception as e:
        raise SchemaError("sampler", str(e)) from None
