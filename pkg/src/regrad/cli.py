"""Command line: ``regrad run | fixtures | verify-witness``."""
from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from . import __version__
from .analysis import pair_phis, witness_holds
from .errors import RegradError
from .pipeline import EXIT_ERROR, EXIT_NEGATIVE, EXIT_OK, render, run
from .scenario import load_scenario, scenario_from_dict, to_complex
from .theory import WaveState


def fixture_dir():
    return resources.files("regrad") / "fixtures"


def list_fixtures() -> list[str]:
    return sorted(p.name for p in fixture_dir().iterdir() if p.name.endswith(".json"))


def resolve_scenario(name: str) -> Path:
    path = Path(name)
    if path.exists():
        return path
    for candidate in (name, f"{name}.json"):
        f = fixture_dir() / candidate
        if f.is_file():
            return Path(str(f))
    raise FileNotFoundError(f"no scenario file or shipped fixture named {name!r}")


def _parse_tol(items):
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"--tol expects name=value, got {item!r}")
        out[key.strip()] = float(value)
    return out


def cmd_run(args) -> int:
    path = resolve_scenario(args.scenario)
    if args.seed is not None or args.tol:
        data = json.loads(path.read_text(encoding="utf-8"))
        load_scenario(path)  # surface parse/schema errors against the file itself
        if args.seed is not None:
            data["sampler"]["seed"] = args.seed
        data.setdefault("tolerances", {}).update(_parse_tol(args.tol))
        sc = scenario_from_dict(data, default_name=path.stem)
    else:
        sc = load_scenario(path)
    report = run(sc)
    blob = render(report, args.format)
    if args.out:
        Path(args.out).write_bytes(blob)
    else:
        sys.stdout.buffer.write(blob)
        sys.stdout.flush()
    return report.exit_code


def cmd_fixtures(args) -> int:
    for name in list_fixtures():
        data = json.loads((fixture_dir() / name).read_text(encoding="utf-8"))
        print(f"{name:32s} {data.get('description', '')}")
    return EXIT_OK


def _state(d) -> WaveState:
    coeffs = {k: to_complex(v) for k, v in d["coeffs"].items()}
    return WaveState.of(coeffs, tuple(d.get("detector", ("x_f", "t_f"))))


def iter_witnesses(report: dict):
    for t in report.get("tasks", []):
        w = t.get("payload", {}).get("witness")
        if w:
            yield t["task"], w


def check_report_witnesses(report: dict) -> list[tuple[str, bool, str]]:
    """Re-evaluate each witness's amplitudes from its states alone."""
    sc = scenario_from_dict({k: v for k, v in report["scenario"].items()})
    out = []
    for task, w in iter_witnesses(report):
        pair = tuple(w["pair"])
        s1, s2 = _state(w["first"]), _state(w["second"])
        p1 = pair_phis(sc.theory, s1, pair)
        p2 = pair_phis(sc.theory, s2, pair)
        ok = witness_holds(p1, p2, w["tolerance"])
        detail = (f"phi = {p1[0]:.12g}, {p1[1]:.12g} -> {p1[2]:.12g}  vs  "
                  f"{p2[0]:.12g}, {p2[1]:.12g} -> {p2[2]:.12g}")
        out.append((task, ok, detail))
    return out


def cmd_verify_witness(args) -> int:
    report = json.loads(Path(args.report).read_text(encoding="utf-8"))
    results = check_report_witnesses(report)
    if not results:
        print("no witnesses in report")
        return EXIT_OK
    bad = 0
    for task, ok, detail in results:
        print(f"{'VALID' if ok else 'FALSE'}  [{task}]  {detail}")
        bad += not ok
    print(f"{len(results) - bad}/{len(results)} witnesses re-validated")
    return EXIT_NEGATIVE if bad else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="regrad", description=__doc__)
    parser.add_argument("--version", action="version", version=f"regrad {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario file (or a shipped fixture name)")
    p.add_argument("scenario")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out")
    p.add_argument("--seed", type=int, help="override the sampler seed")
    p.add_argument("--tol", action="append", metavar="NAME=VALUE", help="override a tolerance")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("fixtures", help="list shipped scenarios")
    p.set_defaults(func=cmd_fixtures)

    p = sub.add_parser("verify-witness", help="re-check every witness in a JSON report")
    p.add_argument("report")
    p.set_defaults(func=cmd_verify_witness)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RegradError, OSError, ValueError, KeyError, argparse.ArgumentTypeError) as e:
        print(f"regrad: error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
