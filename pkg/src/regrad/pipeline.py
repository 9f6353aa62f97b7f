"""Run a scenario's tasks in dependency order and collect a report.

Task statuses: ``pass``, ``fail`` (a negative mathematical verdict),
``skipped`` (with a cause) and ``error`` (operational failure).  Errors in
one task never stop the independent ones.
"""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .analysis import (
    COMBINATOR_STREAM,
    RULES,
    AssociativityReport,
    Witness,
    check_associativity,
    check_representation,
    fit_combinator,
    identify_closed_form,
    pair_phis,
)
from .errors import NonFunctional, NotAssociative, RegradError
from .regraduation import (
    RegraduationResult,
    XiTable,
    build_constraints,
    regraduate_combinator,
    sign_family_states,
    solve_constraints,
    verify_additivity,
)
from .scenario import TASKS, Scenario, complex_json
from .theory import phi_batch, sample_batch, states_from_rows

HOLDOUT_STREAM = 2
TRIPLE_STREAM = 3
REPORT_TABLE_LIMIT = 20

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2


@dataclass
class TaskResult:
    task: str
    status: str
    verdict: str
    payload: dict = field(default_factory=dict)
    cause: str | None = None
    timing_s: float = 0.0


@dataclass
class Report:
    version: str
    headline: str
    scenario: dict
    tasks: list[TaskResult]

    @property
    def exit_code(self) -> int:
        statuses = {t.status for t in self.tasks}
        if "error" in statuses:
            return EXIT_ERROR
        if "fail" in statuses:
            return EXIT_NEGATIVE
        return EXIT_OK

    def task(self, name: str) -> TaskResult | None:
        return next((t for t in self.tasks if t.task == name), None)

    def to_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        d["exit_code"] = self.exit_code
        if not timing:
            for t in d["tasks"]:
                t.pop("timing_s")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        tasks = [TaskResult(**t) for t in d["tasks"]]
        return cls(d["version"], d["headline"], d["scenario"], tasks)


# -- serialization helpers ----------------------------------------------------

def state_json(state) -> dict:
    return {"coeffs": {s: complex_json(a) for s, a in zip(state.slits, state.amps)},
            "detector": list(state.detector)}


def witness_json(w: Witness, pair, tol: float) -> dict:
    keys = (pair[0], pair[1], "joint")
    return {
        "source": w.source,
        "pair": list(pair),
        "tolerance": tol,
        "first": state_json(w.first),
        "second": state_json(w.second),
        "phi_first": {k: complex_json(v) for k, v in zip(keys, w.phis_first)},
        "phi_second": {k: complex_json(v) for k, v in zip(keys, w.phis_second)},
    }


def xi_json(xi: XiTable) -> dict:
    if xi.kind == "interval":
        knots = [float(k) for k in xi.knots]
    else:
        knots = [complex_json(k) for k in xi.knots]
    return {"kind": xi.kind, "knots": knots, "values": [float(v) + 0.0 for v in xi.values]}


def fmt(z) -> str:
    z = complex(z)
    re_, im = z.real + 0.0, z.imag + 0.0
    if im == 0:
        return f"{re_:.12g}"
    if re_ == 0:
        return f"{im:.12g}i"
    return f"{re_:.12g}{im:+.12g}i"


def equation_text(u, v, w) -> str:
    if abs(v - w) == 0:
        return f"ξ({fmt(u)}) = 2ξ({fmt(v)})"
    return f"ξ({fmt(u)}) = ξ({fmt(v)}) + ξ({fmt(w)})"


# -- tasks ----------------------------------------------------------------------

class _Context:
    def __init__(self, sc: Scenario):
        self.sc = sc
        self.verdict = None
        self.table = None
        self.rule = None
        self.regrad: RegraduationResult | None = None
        self.regrad_mode = None
        self.constraint_states = None


class _Skip(Exception):
    pass


def _task_representation(ctx: _Context):
    sc = ctx.sc
    tol = sc.tolerances["representation"]
    v = check_representation(sc.theory, sc.pair, sc.sampler, sc.samples["representation"], tol)
    ctx.verdict = v
    payload = {"status": v.status, "tolerance": tol, "samples_used": v.samples_used,
               "probes_used": v.probes_used,
               "witness": witness_json(v.witness, sc.pair, tol) if v.witness else None}
    return ("pass" if v.is_representation else "fail"), v.status, payload


def _resolve_rule(ctx: _Context):
    theory = ctx.sc.theory
    if ctx.rule is not None:
        return ctx.rule
    if theory.rule:
        return RULES[theory.rule]
    if theory.exponent == 1:
        return RULES["sum"]
    return None


def _task_combinator(ctx: _Context):
    sc = ctx.sc
    if not ctx.verdict.is_representation:
        raise _Skip("NotRepresentation: no combinator S exists for these amplitudes")
    key_tol = sc.tolerances["key"]
    try:
        table = fit_combinator(sc.theory, sc.pair, sc.sampler, sc.samples["combinator"], key_tol)
    except NonFunctional as e:
        payload = {"witness": witness_json(e.witness, sc.pair, key_tol), "message": str(e)}
        return "fail", "NonFunctional", payload
    ctx.table = table
    if sc.theory.rule:
        rule = RULES[sc.theory.rule]
        dev = table.max_deviation(rule)
    else:
        rule, _ = identify_closed_form(table, sc.tolerances["identify"])
        dev = table.max_deviation(rule) if rule else None
    ctx.rule = rule
    sample = [{"x": complex_json(x), "y": complex_json(y), "z": complex_json(z)}
              for x, y, z in zip(table.x[:REPORT_TABLE_LIMIT], table.y[:REPORT_TABLE_LIMIT],
                                 table.z[:REPORT_TABLE_LIMIT])]
    payload = {"entries": len(table), "key_tolerance": key_tol,
               "rule": rule.name if rule else None, "display": rule.display if rule else None,
               "max_deviation": dev, "sample": sample}
    return "pass", "Functional", payload


def _triples(ctx: _Context):
    sc, table = ctx.sc, ctx.table
    values = np.unique(np.concatenate([table.x, table.y]))
    if values.size ** 3 <= sc.samples["triples"]:
        v = values
        g = np.stack(np.meshgrid(v, v, v, indexing="ij"), axis=-1).reshape(-1, 3)
        return g
    rng = np.random.default_rng([sc.sampler.seed, TRIPLE_STREAM])
    return values[rng.integers(0, values.size, (sc.samples["triples"], 3))]


def _assoc_payload(rep: AssociativityReport, S: str):
    return {"S": S, "max_residual": rep.max_residual,
            "worst_triple": [complex_json(t) for t in rep.worst_triple],
            "lhs": complex_json(rep.lhs), "rhs": complex_json(rep.rhs),
            "grid_size": rep.grid_size, "tolerance": rep.tolerance, "relative": rep.relative}


def _task_associativity(ctx: _Context):
    if ctx.table is None:
        raise _Skip("no functional combinator table")
    tol = ctx.sc.tolerances["associativity"]
    S = ctx.rule if ctx.rule is not None else ctx.table
    rep = check_associativity(S, _triples(ctx), tol)
    name = ctx.rule.display if ctx.rule is not None else "sampled table"
    return ("pass" if rep.passed else "fail"), ("Associative" if rep.passed else "NotAssociative"), \
        _assoc_payload(rep, name)


def _regrad_payload(res: RegraduationResult, mode: str) -> dict:
    return {
        "mode": mode,
        "status": res.status,
        "anchor": complex_json(res.anchor),
        "anchor_value": res.anchor_value,
        "additivity_residual": res.additivity_residual,
        "constrained_residual": res.constrained_residual,
        "unconstrained_sup": res.unconstrained_sup,
        "min_singular_value": res.min_singular_value,
        "details": res.details,
        "xi_table": xi_json(res.xi),
    }


def _constraint_states(ctx: _Context):
    sc = ctx.sc
    phases = [1, -1]
    w = ctx.verdict.witness
    if w is not None:
        for s in (w.first, w.second):
            a0, a1 = s.amps
            if a0 != 0:
                r = a1 / a0
                if all(abs(r - p) > 1e-12 for p in phases):
                    phases.append(r)
    return sign_family_states(sc.pair, sc.regraduation["alpha_grid"], phases)


def _task_regraduation(ctx: _Context):
    sc = ctx.sc
    tol = sc.tolerances
    if not ctx.verdict.is_representation:
        states = _constraint_states(ctx)
        cs = build_constraints(sc.theory, states, sc.pair, tol["merge"])
        # anchor at the single-slit amplitude of the state with alpha nearest 1
        base = min(states, key=lambda s: abs(s.amps[0] - 1))
        anchor = pair_phis(sc.theory, base, sc.pair)[0]
        if "anchor" in sc.regraduation:
            anchor = sc.regraduation["anchor"]
        res = solve_constraints(cs, anchor, tol["regraduation"], tol["triviality"])
        ctx.regrad, ctx.regrad_mode, ctx.constraint_states = res, "constraints", states
        payload = _regrad_payload(res, "constraints")
        eqs = []
        for u, v, w in cs.equations:
            text = equation_text(cs.points[u], cs.points[v], cs.points[w])
            if text not in eqs:
                eqs.append(text)
        payload["equations"] = eqs
        payload["states"] = [state_json(s) for s in states]
        return ("pass" if res.found else "fail"), res.status, payload

    rule = _resolve_rule(ctx)
    if rule is None:
        raise RegradError("no closed-form combinator identified; cannot build xi on an interval")
    domain = sc.regraduation.get("domain")
    if domain is None:
        domain = _observed_domain(ctx)
    try:
        res = regraduate_combinator(rule, domain, sc.regraduation["grid"], sc.regraduation.get("anchor"),
                                    tol["regraduation"], tol["triviality"], tol["associativity"])
    except NotAssociative as e:
        return "fail", "NotAssociative", {"mode": "combinator", "message": str(e),
                                          **_assoc_payload(e.report, rule.display)}
    ctx.regrad, ctx.regrad_mode = res, "combinator"
    payload = _regrad_payload(res, "combinator")
    payload["S"] = rule.display
    payload["domain"] = [float(d) for d in domain]
    return ("pass" if res.found else "fail"), res.status, payload


def _observed_domain(ctx: _Context):
    sc = ctx.sc
    rows = sample_batch(sc.sampler.seed, COMBINATOR_STREAM, sc.pair, sc.sampler,
                        min(sc.samples["combinator"], 2000))
    vals = np.concatenate([phi_batch(sc.theory, sc.pair, rows, c) for c in _configs(sc.pair)])
    if np.any(np.abs(vals.imag) > 0):
        raise RegradError("amplitudes are complex; give regraduation.domain explicitly for a real slice")
    return float(vals.real.min()), float(vals.real.max())


def _configs(pair):
    from .setup_algebra import Configuration
    return [Configuration.of([pair[0]]), Configuration.of([pair[1]]), Configuration.of(pair)]


def _task_additivity(ctx: _Context):
    sc = ctx.sc
    if ctx.regrad is None:
        raise _Skip("no regraduation result")
    tol = sc.tolerances["additivity"]
    if ctx.regrad.found:
        rows = sample_batch(sc.sampler.seed, HOLDOUT_STREAM, sc.pair, sc.sampler, sc.samples["holdout"])
        states = states_from_rows(sc.pair, rows)
        xi, which = ctx.regrad.xi, "fitted xi on held-out states"
    else:
        # xi = 0 is additive trivially; show the anchored, non-constant best fit failing
        states = ctx.constraint_states or []
        xi, which = ctx.regrad.constrained_fit, "anchored best-fit xi on the constraint states"
        if not states:
            raise _Skip("no constraint states")
    st = verify_additivity(xi, sc.theory, states, sc.pair)
    payload = {"xi": which, "max": st.max, "mean": st.mean, "max_relative": st.max_relative,
               "n": st.n, "tolerance": tol, "worst_state": state_json(states[st.worst_index])}
    ok = st.max <= tol
    return ("pass" if ok else "fail"), ("Additive" if ok else "NotAdditive"), payload


_RUNNERS = {
    "representation": _task_representation,
    "combinator": _task_combinator,
    "associativity": _task_associativity,
    "regraduation": _task_regraduation,
    "additivity": _task_additivity,
}


def headline(tasks: list[TaskResult]) -> str:
    by = {t.task: t for t in tasks}
    parts = []
    rep = by.get("representation")
    if rep:
        parts.append({"pass": "REPRESENTATION", "fail": "NOT A REPRESENTATION"}.get(rep.status, "representation ERROR"))
    comb = by.get("combinator")
    if comb and comb.status == "pass":
        part = f"S ≈ {comb.payload['display']}" if comb.payload.get("display") else "S tabulated"
        assoc = by.get("associativity")
        if assoc and assoc.status == "pass":
            part += " associative"
        elif assoc and assoc.status == "fail":
            part += " NOT ASSOCIATIVE"
        parts.append(part)
    elif comb and comb.status == "fail":
        parts.append("S not functional")
    reg = by.get("regraduation")
    if reg:
        if reg.verdict == "Found":
            parts.append("ξ found")
        elif reg.verdict == "Trivial":
            parts.append("regraduation TRIVIAL (ξ = 0)")
        elif reg.verdict == "NotAssociative":
            parts.append("no regraduation (S not associative)")
        elif reg.status == "error":
            parts.append("regraduation ERROR")
    return "; ".join(parts) if parts else "no tasks"


def run(sc: Scenario) -> Report:
    ctx = _Context(sc)
    results = []
    done = {}
    for name in TASKS:
        if name not in sc.tasks:
            continue
        t0 = time.perf_counter()
        try:
            need = {"combinator": "representation", "regraduation": "representation"}.get(name)
            if need and done.get(need) == "error":
                raise _Skip(f"prerequisite {need!r} failed to run")
            status, verdict, payload = _RUNNERS[name](ctx)
            cause = None
        except _Skip as e:
            status, verdict, payload, cause = "skipped", "Skipped", {}, str(e)
        except (RegradError, ValueError, ArithmeticError) as e:
            status, verdict, payload, cause = "error", type(e).__name__, {}, str(e)
        done[name] = status
        results.append(TaskResult(name, status, verdict, _clean(payload), cause, time.perf_counter() - t0))
    return Report(__version__, headline(results), sc.echo(), results)


def _clean(obj):
    """Coerce numpy scalars so payloads are plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) + 0.0
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return complex_json(obj)
    return obj


# -- rendering ------------------------------------------------------------------

def render(report: Report, format: str = "text", timing: bool = True) -> bytes:
    if format == "json":
        return (json.dumps(report.to_dict(timing), sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode()
    if format != "text":
        raise ValueError(f"unknown format {format!r}")
    return _render_text(report).encode()


def _c(d) -> str:
    return fmt(complex(d["re"], d["im"]))


def _state_text(s) -> str:
    return "(" + ", ".join(f"{k}={_c(v)}" for k, v in s["coeffs"].items()) + ")"


def _render_text(report: Report) -> str:
    sc = report.scenario
    out = [report.headline, ""]
    out.append(f"regrad {report.version}  scenario: {sc.get('name', '')}  exit code {report.exit_code}")
    if sc:
        out.append(f"theory: {sc['theory']['kind']}  slits: {', '.join(sc['slits'])}  "
                   f"sampler: {sc['sampler']['kind']} (seed {sc['sampler']['seed']})")
    for t in report.tasks:
        out.append("")
        out.append(f"[{t.task}] {t.status.upper()}: {t.verdict}")
        if t.cause:
            out.append(f"  cause: {t.cause}")
        p = t.payload
        if p.get("witness"):
            w = p["witness"]
            a, b = w["pair"]
            for key in ("first", "second"):
                ph = w[f"phi_{key}"]
                out.append(f"  witness state {_state_text(w[key])}: "
                           f"phi({a})={_c(ph[a])}  phi({b})={_c(ph[b])}  phi({a} v {b})={_c(ph['joint'])}")
            out.append("  equal single-slit amplitudes, different joint amplitude: "
                       "the relative sign/phase is not recoverable")
        if t.task == "representation" and t.status == "pass":
            out.append(f"  no witness in {p['samples_used']} samples + {p['probes_used']} probes "
                       f"(tol {p['tolerance']:g}); a sampling verdict, not a proof")
        if t.task == "combinator" and t.status == "pass":
            out.append(f"  {p['entries']} entries; closed form: {p['display'] or 'none identified'}"
                       + (f" (max deviation {p['max_deviation']:.3g})" if p.get("max_deviation") is not None else ""))
        if t.task in ("associativity",) or (t.task == "regraduation" and t.verdict == "NotAssociative"):
            if "max_residual" in p:
                wt = ", ".join(_c(v) for v in p["worst_triple"])
                out.append(f"  S = {p['S']}: max |S(S(x,y),z) - S(x,S(y,z))| = {p['max_residual']:.6g} "
                           f"over {p['grid_size']} triples; worst (x,y,z) = ({wt}): "
                           f"{_c(p['lhs'])} vs {_c(p['rhs'])}")
        if t.task == "regraduation" and "mode" in p and "status" in p:
            out.append(f"  mode: {p['mode']}  anchor xi({_c(p['anchor'])}) = {p['anchor_value']:g}")
            for eq in p.get("equations", []):
                out.append(f"    {eq}")
            out.append(f"  constrained residual {p['constrained_residual']:.6g}")
            if p["status"] == "Trivial":
                out.append(f"  unconstrained solution sup-norm {p['unconstrained_sup']:.3g}, "
                           f"smallest singular value {p['min_singular_value']:.3g}: only xi = 0 solves the system")
            else:
                xt = p["xi_table"]
                out.append(f"  xi tabulated at {len(xt['values'])} {'knots' if xt['kind'] == 'interval' else 'points'}")
        if t.task == "additivity" and "max" in p:
            out.append(f"  {p['xi']}: max residual {p['max']:.6g}, mean {p['mean']:.3g} over {p['n']} states "
                       f"(tol {p['tolerance']:g})")
    return "\n".join(out) + "\n"
