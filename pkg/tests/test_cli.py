import json

import pytest

from regrad.cli import check_report_witnesses, list_fixtures, main, resolve_scenario
from regrad.errors import DependencyError, ParseError, SchemaError
from regrad.pipeline import Report, render, run
from regrad.scenario import DEFAULT_TOLERANCES, load_scenario, scenario_from_dict

FIXTURES = ["quadratic-counterexample.json", "linear-baseline.json",
            "product-combinator.json", "nonassociative-combinator.json"]
EXPECTED_EXIT = {"quadratic-counterexample.json": 2, "linear-baseline.json": 0,
                 "product-combinator.json": 0, "nonassociative-combinator.json": 2}


def minimal(**extra):
    return {"slits": ["a", "a'"], "theory": {"kind": "linear"},
            "sampler": {"kind": "real-uniform", "seed": 3, "lo": -1, "hi": 1}, **extra}


def write(tmp_path, obj, name="s.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return p


def test_fixtures_are_shipped():
    assert list_fixtures() == sorted(FIXTURES)
    for f in FIXTURES:
        sc = load_scenario(resolve_scenario(f))
        assert sc.name == f[:-5]


def test_defaults_and_seed_echoed():
    sc = scenario_from_dict(minimal())
    echo = sc.echo()
    assert echo["sampler"]["seed"] == 3
    assert echo["tolerances"]["representation"] == DEFAULT_TOLERANCES["representation"]
    assert echo["tolerances"]["additivity"] == pytest.approx(10 * DEFAULT_TOLERANCES["regraduation"])
    assert echo["pair"] == ["a", "a'"]


def test_parse_error_has_position(tmp_path):
    p = write(tmp_path, '{\n  "slits": ["a",\n  ]\n}')
    with pytest.raises(ParseError) as e:
        load_scenario(p)
    assert (e.value.line, e.value.column) == (3, 3)


@pytest.mark.parametrize("patch, field", [
    ({"theory": {"kind": "cubic"}}, "theory/kind"),
    ({"slits": ["a"]}, "slits"),
    ({"slits": ["a", "v"]}, "slits"),
    ({"pair": ["a", "z"]}, "pair"),
    ({"sampler": {"kind": "grid"}}, "sampler"),
    ({"theory": {"kind": "power"}}, "theory/p"),
    ({"regraduation": {"domain": [2, 1]}}, "regraduation/domain"),
])
def test_schema_errors(patch, field):
    with pytest.raises(SchemaError) as e:
        scenario_from_dict(minimal(**patch))
    assert e.value.field == field


def test_dependency_error():
    with pytest.raises(DependencyError):
        scenario_from_dict(minimal(tasks=["associativity"]))
    with pytest.raises(DependencyError):
        scenario_from_dict(minimal(tasks=["regraduation", "representation"]))


def test_empty_task_list():
    rep = run(scenario_from_dict(minimal(tasks=[])))
    assert rep.tasks == [] and rep.exit_code == 0


@pytest.mark.parametrize("fixture", FIXTURES)
def test_fixture_exit_codes_and_json_round_trip(fixture):
    rep = run(load_scenario(resolve_scenario(fixture)))
    assert rep.exit_code == EXPECTED_EXIT[fixture]
    d = json.loads(render(rep, "json"))
    back = Report.from_dict({k: v for k, v in d.items() if k != "exit_code"})
    assert back.to_dict() == d


def test_quadratic_report_content():
    rep = run(load_scenario(resolve_scenario("quadratic-counterexample")))
    assert rep.headline == "NOT A REPRESENTATION; regraduation TRIVIAL (ξ = 0)"
    assert [t.status for t in rep.tasks] == ["fail", "skipped", "skipped", "fail", "fail"]
    text = render(rep, "text").decode()
    assert "phi(a v a')=4" in text and "phi(a v a')=0" in text
    assert "ξ(4) = 2ξ(1)" in text and "ξ(0) = 2ξ(1)" in text


def test_headlines():
    heads = {f: run(load_scenario(resolve_scenario(f))).headline for f in FIXTURES[1:]}
    assert heads["linear-baseline.json"] == "REPRESENTATION; S ≈ x+y associative; ξ found"
    assert heads["product-combinator.json"] == "REPRESENTATION; S ≈ x*y associative; ξ found"
    assert "NOT ASSOCIATIVE" in heads["nonassociative-combinator.json"]


def test_cli_run_and_verify(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["run", "quadratic-counterexample", "--format", "json", "--out", str(out)]) == 2
    assert main(["verify-witness", str(out)]) == 0
    assert "1/1 witnesses re-validated" in capsys.readouterr().out


def test_verify_witness_rejects_a_tampered_witness(tmp_path):
    rep = run(load_scenario(resolve_scenario("quadratic-counterexample")))
    d = json.loads(render(rep, "json"))
    d["tasks"][0]["payload"]["witness"]["second"]["coeffs"]["a'"] = {"re": 1.0, "im": 0.0}
    assert [ok for _, ok, _ in check_report_witnesses(d)] == [False]
    assert main(["verify-witness", str(write(tmp_path, d))]) == 2


def test_cli_overrides(tmp_path, capsys):
    assert main(["run", "linear-baseline", "--format", "json", "--seed", "99", "--tol", "key=1e-8"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["scenario"]["sampler"]["seed"] == 99
    assert d["scenario"]["tolerances"]["key"] == 1e-8


def test_cli_errors(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.json")]) == 1
    assert main(["run", str(write(tmp_path, "{"))]) == 1
    assert main(["run", "linear-baseline", "--tol", "nonsense"]) == 1
    assert "error" in capsys.readouterr().err


def test_cli_fixtures_listing(capsys):
    assert main(["fixtures"]) == 0
    out = capsys.readouterr().out
    assert all(f in out for f in FIXTURES)
