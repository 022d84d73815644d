import json
import os
import subprocess
import sys

import pytest

from gradedlie import cli
from gradedlie.algebra import Basis, Element, Window, validate_params
from gradedlie.automorphisms import compose, make_scale, make_shear
from gradedlie.errors import InvalidInput


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out), err


def floats_in(obj):
    if isinstance(obj, float):
        return [obj]
    if isinstance(obj, dict):
        return [f for v in obj.values() for f in floats_in(v)]
    if isinstance(obj, list):
        return [f for v in obj for f in floats_in(v)]
    return []


# -- parsing ------------------------------------------------------------------


def test_parse_rational():
    assert cli.parse_rational("-3/6") == cli.Fraction(-1, 2)
    assert cli.parse_rational("7") == 7
    for bad in ("0.5", "1/-2", "x", "", "1e3"):
        with pytest.raises(InvalidInput):
            cli.parse_rational(bad)


def test_parse_element():
    e = cli.parse_element("Y0 + 2*M1 - 1/2*M-1")
    assert e == Element({Basis("Y", 0): 1, Basis("M", 1): 2, Basis("M", -1): cli.Fraction(-1, 2)})
    assert cli.parse_element("0") == Element()
    with pytest.raises(InvalidInput):
        cli.parse_element("Y0 Y1")
    with pytest.raises(InvalidInput):
        cli.parse_element("Q3")


def test_parse_degrees():
    assert cli.parse_degrees("-2..3") == (-2, 3)
    with pytest.raises(InvalidInput):
        cli.parse_degrees("3..1")
    with pytest.raises(InvalidInput):
        cli.parse_degrees("1-3")


def test_run_config_invariants():
    p = validate_params(3, cli.Fraction(1, 3))
    cli.RunConfig(p, 5, (-3, 3))
    with pytest.raises(InvalidInput):
        cli.RunConfig(p, 4)
    with pytest.raises(InvalidInput):
        cli.RunConfig(p, 5, (-4, 0))
    with pytest.raises(InvalidInput):
        cli.RunConfig(p, 6, seed=-1)


def test_constructor_lines():
    p = validate_params(1, 0)
    w = Window(6)
    expected = compose(make_scale(p, w, 2, 3), make_shear(p, w, 5))
    assert cli.parse_aut_lines(p, w, ["scale 2 3", "# comment", "shear 5"]) == expected
    for bad in ("scale 2", "flip 2", "twist 1", "unipotent 1 pow 2"):
        with pytest.raises(InvalidInput):
            cli.build_constructor(p, w, bad)


# -- jacobi -------------------------------------------------------------------


def test_jacobi_ok(capsys):
    code, data, _ = run_json(capsys, "jacobi", "--lambda", "3", "--mu", "1/3", "--window", "6")
    assert code == 0 and data["ok"] and data["violations"] == []
    assert data["params"] == {"lambda": "3", "mu": "1/3", "case": "GenericMu"}


def test_jacobi_excluded_twisted(capsys):
    code, out, err = run(capsys, "jacobi", "--lambda", "0", "--mu", "0")
    assert code == 2 and out == ""
    assert "excluded: λ=μ=0" in err


def test_jacobi_excluded_half_integer(capsys):
    code, _, err = run(capsys, "jacobi", "--lambda", "1", "--mu", "1/2")
    assert code == 2 and "1/2+Z" in err


def test_negative_values_and_table(capsys):
    code, out, _ = run(capsys, "jacobi", "--lambda", "-5", "--mu", "2/3", "--window", "5", "--format", "table")
    assert code == 0 and "0 violations" in out


def test_bad_input_exit_codes(capsys):
    assert run(capsys, "jacobi", "--lambda", "0.5", "--mu", "0")[0] == 2
    assert run(capsys, "jacobi", "--lambda", "1")[0] == 2
    assert run(capsys, "jacobi", "--lambda", "1", "--mu", "0", "--window", "4")[0] == 2
    assert run(capsys, "nonsense")[0] == 2
    assert run(capsys, "classify", "--lambda", "1", "--mu", "0", "--degrees", "-9..0")[0] == 2


# -- classify -----------------------------------------------------------------


def test_classify_generic_mu(capsys):
    code, data, _ = run_json(capsys, "classify", "--lambda", "3", "--mu", "1/3")
    assert code == 0
    assert set(data) == {
        "params", "window", "dim_deg0", "dim_inner_deg0", "h1_by_degree", "outer_basis_names", "matches_theorem",
    }
    assert data["outer_basis_names"] == ["D"]
    assert all(v == 0 for k, v in data["h1_by_degree"].items() if k != "0")
    assert sorted(int(k) for k in data["h1_by_degree"]) == list(range(-3, 4))


def test_classify_lambda_minus_one_is_a_mismatch(capsys):
    # ad Y0 coincides with Dbar_minus1 here, so only two outer classes survive
    code, data, err = run_json(capsys, "classify", "--lambda", "-1", "--mu", "0")
    assert code == 1
    assert data["h1_by_degree"]["0"] == 2
    assert data["outer_basis_names"] == ["D", "D_minus1"]
    assert data["matches_theorem"] is False


def test_classify_table(capsys):
    code, out, _ = run(capsys, "classify", "--lambda", "1", "--mu", "0", "--degrees", "-1..1", "--format", "table")
    assert code == 0
    assert "outer basis: D, D_plus1" in out and "matches theorem: yes" in out


# -- report -------------------------------------------------------------------


def test_report_grid_file(capsys, tmp_path):
    grid = tmp_path / "grid.txt"
    grid.write_text("# lambda mu\n3 1/3\n1 1/2\n7 0\n")
    code, rows, _ = run_json(capsys, "report", "--grid", str(grid), "--window", "5", "--samples", "3", "--jobs", "1")
    assert code == 0
    assert [r["lambda"] for r in rows] == ["3", "1", "7"]
    assert rows[1]["excluded"].startswith("excluded")
    assert rows[0]["case"] == "GenericMu" and rows[0]["group_laws"] == "pass"


def test_report_json_grid_and_parallel_order(capsys, tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps([["1", "0"], ["-2", "0"], ["2", "3"]]))
    code, rows, _ = run_json(capsys, "report", "--grid", str(grid), "--window", "5", "--samples", "2", "--jobs", "2")
    assert code == 0
    assert [(r["lambda"], r["mu"]) for r in rows] == [("1", "0"), ("-2", "0"), ("2", "3")]
    assert "excluded" in rows[2]


def test_report_empty_grid(capsys, tmp_path):
    grid = tmp_path / "empty.txt"
    grid.write_text("")
    code, out, _ = run(capsys, "report", "--grid", str(grid), "--format", "table")
    assert code == 0 and "lambda" in out


def test_report_default_grid_flags_lambda_minus_one(capsys):
    code, rows, _ = run_json(capsys, "report", "--samples", "2", "--jobs", "1")
    assert code == 1
    assert len(rows) == 5
    assert [r["matches_theorem"] for r in rows] == [True, True, False, True, True]
    assert all(r["group_laws"] == "pass" for r in rows)


# -- aut ----------------------------------------------------------------------


def test_aut_factor_from_export(capsys, tmp_path):
    code, out, _ = run(capsys, "aut", "export", "--lambda", "1", "--mu", "0", "--expr", "scale 2 3; shear 5")
    assert code == 0
    spec = tmp_path / "sigma.json"
    spec.write_text(out)
    code, out, _ = run(capsys, "aut", "factor", "--lambda", "1", "--mu", "0", "--spec", str(spec), "--format", "table")
    assert code == 0
    assert "ε=1 α=2 β=3" in out and "e=5" in out and "round-trip OK" in out


def test_aut_factor_json(capsys):
    code, data, _ = run_json(capsys, "aut", "factor", "--lambda", "-2", "--mu", "0", "--expr", "flip -1; unipotent 7")
    assert code == 0
    assert data["epsilon"] == "-1" and data["unipotent_b"] == "7"
    assert data["residual_is_identity"] and data["roundtrip"]
    assert floats_in(data) == []


def test_aut_verify_identity(capsys, tmp_path):
    spec = tmp_path / "id.txt"
    spec.write_text("identity\n")
    code, data, _ = run_json(capsys, "aut", "verify", "--lambda", "1", "--mu", "0", "--spec", str(spec), "--samples", "3")
    assert code == 0 and data["ok"]


def test_aut_verify_mutated_unipotent(capsys, tmp_path):
    spec = tmp_path / "bad.txt"
    spec.write_text("unipotent 1 power 2\n")
    argv = ["aut", "verify", "--lambda", "-2", "--mu", "0", "--spec", str(spec), "--samples", "2", "--format", "table"]
    code, out, _ = run(capsys, *argv)
    assert code == 1
    assert "violation on [L" in out


def test_aut_factor_rejects_non_automorphism(capsys):
    code, _, err = run(capsys, "aut", "factor", "--lambda", "-2", "--mu", "0", "--expr", "unipotent 1 power 2")
    assert code == 1 and "NotAutomorphism" in err


def test_aut_input_errors(capsys, tmp_path):
    base = ["aut", "verify", "--lambda", "1", "--mu", "0"]
    assert run(capsys, *base)[0] == 2
    assert run(capsys, *base, "--spec", str(tmp_path / "missing.txt"))[0] == 2
    assert run(capsys, *base, "--expr", "flip 3")[0] == 2
    assert run(capsys, "aut", "verify", "--lambda", "3", "--mu", "1/3", "--expr", "flip -1")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, *base, "--spec", str(bad))[0] == 2


# -- determinism and process-level behaviour ----------------------------------


def test_json_is_deterministic(capsys):
    argv = ["aut", "verify", "--lambda", "1", "--mu", "0", "--expr", "scale 2 3", "--samples", "3", "--seed", "5"]
    first = run(capsys, *argv)[1]
    assert run(capsys, *argv)[1] == first
    assert floats_in(json.loads(first)) == []


def test_seed_env_overrides_flag(capsys, monkeypatch):
    argv = ["aut", "verify", "--lambda", "-1", "--mu", "0", "--expr", "identity", "--samples", "2"]
    monkeypatch.setenv("GRADEDLIE_SEED", "9")
    a = run(capsys, *argv, "--seed", "1")[1]
    b = run(capsys, *argv, "--seed", "9")[1]
    assert a == b
    monkeypatch.setenv("GRADEDLIE_SEED", "nine")
    assert run(capsys, *argv)[0] == 2


def test_module_entry_point():
    env = dict(os.environ)
    env.pop("GRADEDLIE_SEED", None)
    out = subprocess.run(
        [sys.executable, "-m", "gradedlie", "jacobi", "--lambda", "0", "--mu", "0"],
        capture_output=True, text=True, env=env,
    )
    assert out.returncode == 2
    assert out.stdout == "" and "excluded" in out.stderr
