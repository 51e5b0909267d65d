"""Golden JSON for one invocation of every subcommand.

Regenerate after an intended output change with
MAXWELLKIT_UPDATE_GOLDEN=1 python3 -m pytest tests/test_cli.py
"""
import json
import os
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from maxwellkit.cli import main

ROOT = Path(__file__).parent.parent
GOLDEN = Path(__file__).parent / "golden"
SCHEMAS = ROOT / "docs" / "schemas"
UPDATE = os.environ.get("MAXWELLKIT_UPDATE_GOLDEN") == "1"

WORKED = "c_p - c_V == T*D(p;T|V)*D(V;T|p)"

# name -> (argv, expected exit code, schema)
CASES = {
    "models-list": (["models", "list"], 0, "models-list"),
    "models-show": (["models", "show", "vdw"], 0, "models-show"),
    "derive": (["derive", "(4,3,1)", "--model", "ideal"], 0, "derive"),
    "derive2": (["derive2", "((5,1,2),2,1)", "--model", "generic"], 0, "derive2"),
    "energy": (["energy", "E24", "--model", "vdw"], 0, "energy"),
    "table": (["table", "--model", "generalized"], 0, "table"),
    "verify": (["verify", WORKED, "--generic"], 0, "verify"),
    "check-s": (["check-s", "--model", "non_example", "--smooth"], 1, "check-s"),
    "recalibrate": (["recalibrate", "--u", "x*y", "--v", "x*y^2"], 0, "recalibrate"),
    "transversal": (["transversal", "--v", "x*y", "--curve0", "x=2*ln(y)",
                     "--curve1", "x=(3*ln(y) - ln(10))/2", "--vars", "X=ln(x)", "Y=x*y",
                     "--domain", "0.5,2,0.5,2"], 0, "transversal"),
    "census": (["census", "--model", "ideal"], 0, "census"),
}


def run(argv, capsys):
    code = main(argv + ["--format", "json", "--seed", "7"])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("name", sorted(CASES))
def test_golden(name, capsys):
    argv, want_code, schema = CASES[name]
    code, out, err = run(argv, capsys)
    assert code == want_code, err
    path = GOLDEN / f"{name}.json"
    if UPDATE:
        path.write_text(out, encoding="utf-8")
    assert out == path.read_text(encoding="utf-8")
    jsonschema.validate(json.loads(out), json.loads((SCHEMAS / f"{schema}.schema.json").read_text()))


@pytest.mark.parametrize("name", ["derive", "check-s", "recalibrate"])
def test_byte_identical_across_runs(name, capsys):
    argv = CASES[name][0]
    first = run(argv, capsys)[1]
    second = run(argv, capsys)[1]
    assert first == second


def test_threads_do_not_change_output(capsys):
    argv = CASES["check-s"][0]
    assert run(argv, capsys)[1] == run(argv + ["--threads", "4"], capsys)[1]


def test_console_entry_point_is_deterministic():
    cmd = [sys.executable, "-m", "maxwellkit", "verify", "c_p == c_V", "--model", "ideal",
           "--format", "json", "--seed", "11"]
    a = subprocess.run(cmd, capture_output=True, text=True)
    b = subprocess.run(cmd, capture_output=True, text=True)
    assert a.returncode == b.returncode == 1
    assert a.stdout == b.stdout and a.stdout
    assert json.loads(a.stdout)["verdict"] == "Refuted"


def test_seed_from_environment(monkeypatch, capsys):
    argv = ["verify", "c_p == c_V", "--model", "ideal", "--format", "json"]
    monkeypatch.setenv("MAXWELLKIT_SEED", "11")
    main(argv)
    from_env = capsys.readouterr().out
    main(argv + ["--seed", "11"])
    assert capsys.readouterr().out == from_env
    assert json.loads(from_env)["seed"] == 11


@pytest.mark.parametrize("argv, code", [
    (["derive", "(4,3)"], 2),                                   # parse error
    (["derive", "(4,3,9)"], 2),                                 # bad code
    (["derive", "(4,3,1)", "--model", "argon"], 2),             # unknown model
    (["derive", "(4,3,1)", "--model", "ideal", "--param", "delta=1"], 2),
    (["derive", "(1,3,6)", "--model", "ideal"], 3),             # degenerate
    (["verify", "c_p == c_V", "--model", "ideal"], 1),          # refuted
    (["verify", WORKED, "--model", "vdw"], 0),
    (["check-s", "--u", "x*y", "--v", "x*y^1.4", "--smooth"], 0),
    (["check-s", "--model", "ideal", "--area", "--smooth"], 2),
    (["transversal", "--v", "x*y", "--curve0", "x=y", "--curve1", "x=y"], 3),
    (["energy", "E99"], 2),
    (["nonsense"], 2),
])
def test_exit_codes(argv, code, capsys):
    assert main(argv) == code
    out = capsys.readouterr()
    if code in (2, 3):
        assert out.err and not out.out


def test_formats(capsys):
    assert main(["derive", "(4,3,2)", "--format", "latex"]) == 0
    latex = capsys.readouterr().out
    assert "\\frac{g_{1}}{f_{1}}" in latex
    assert main(["derive", "(4,3,2)"]) == 0
    assert "g_1/f_1" in capsys.readouterr().out


def test_param_override(capsys):
    main(["models", "show", "ideal", "--param", "gamma=2", "--format", "json"])
    d = json.loads(capsys.readouterr().out)
    assert d["params"]["gamma"] == 2.0 and d["calibrated"] is True


def test_verify_file(tmp_path, capsys):
    f = tmp_path / "ids.txt"
    f.write_text("# Maxwell relations\nD(T;V|S) == -D(p;S|V)\n\nD(S;V|T) == D(p;T|V)\n")
    assert main(["verify", "--file", str(f), "--generic", "--format", "json"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert [r["verdict"] for r in d["results"]] == ["ProvedSymbolic"] * 2
    jsonschema.validate(d, json.loads((SCHEMAS / "verify.schema.json").read_text()))


def test_model_file_selector(tmp_path, capsys):
    f = tmp_path / "gas.model"
    f.write_text("name = mine\nu = x*y\nv = ln(x*y^2)\n[domain]\nx = [1, 2]\ny = [1, 2]\n")
    assert main(["models", "show", str(f), "--format", "json"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["name"] == "mine" and d["calibrated"] is True
