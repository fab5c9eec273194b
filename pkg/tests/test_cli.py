import csv
import dataclasses
import io
import json
import subprocess
import sys

import pytest

from ltlab import cli, reports
from ltlab import verifier as vf
from ltlab.testfunctions import FamilyParams
from oracle_values import LERAY_BUMP


def run(args):
    return cli.run_command(args)


def without_runtime(text):
    rows = list(csv.reader(io.StringIO(text)))
    col = rows[0].index("runtime_ms")
    return [r[:col] + r[col + 1:] for r in rows]


# config -----------------------------------------------------------------------

def test_load_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# core run\nsuite = core\ndims = 2   # one dim\n\n")
    cfg = cli.load_config(path)
    assert cfg.suite == "core" and cfg.dims == [2]


def test_load_config_missing_file(tmp_path):
    with pytest.raises(cli.UsageError):
        cli.load_config(tmp_path / "absent.cfg")


@pytest.mark.parametrize("body,line", [("suite = core\nbogus = 1\n", 2),
                                       ("dims = 2\n\nseed = x\n", 3),
                                       ("suite core\n", 1),
                                       ("suite = nope\n", 1)])
def test_config_errors_carry_line_numbers(tmp_path, body, line):
    path = tmp_path / "bad.cfg"
    path.write_text(body)
    with pytest.raises(cli.UsageError, match=f"bad.cfg:{line}:"):
        cli.load_config(path)


def test_flags_override_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("suite = radial\ndims = 2\nseed = 4\n")
    cfg = cli.resolve(["verify", "--config", str(path), "--dims", "3"])
    assert cfg.dims == [3] and cfg.suite == "radial" and cfg.seed == 4


def test_config_error_exits_two(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("dims = 2\nfamily = kind=nope\n")
    assert run(["verify", "--config", str(path)]) == 2
    assert "bad.cfg:2" in capsys.readouterr().err


def test_family_and_ranges_parse():
    cfg = cli.resolve(["sweep", "--param", "eps", "--range", "0.1:0.3:3", "--family",
                       "kind=hardy_eps;eps=0.2", "--dims", "2,3"])
    assert cfg.range == (0.1, 0.3, 3) and cfg.dims == [2, 3]
    assert cfg.family == FamilyParams("hardy_eps", eps=0.2)
    assert cfg.output_format() == "csv"
    assert cli.resolve(["verify", "--out", "r.json"]).output_format() == "json"


# exit codes -------------------------------------------------------------------

@pytest.mark.parametrize("args", [["verify", "--suite", "nope"], ["verify", "--bogus"], [],
                                  ["probe", "--dim", "2", "--beta", "0.5"],
                                  ["sweep", "--param", "eps"], ["verify", "--dims", "2,x"],
                                  ["verify", "--tol", "-1"], ["eval", "--functional", "lq"],
                                  ["eval", "--dims", "1"], ["verify", "--dims", "9"]])
def test_usage_errors_exit_two(args, capsys):
    assert run(args) == 2
    assert capsys.readouterr().err.startswith("ltlab: error:")


def test_failed_check_exits_one(monkeypatch):
    bad = vf.CheckReport("link", 2, {}, 2.0, 1.0, -1.0, "fail", 1e-12, 0)
    inc = vf.CheckReport("link", 2, {}, float("nan"), float("nan"), float("nan"),
                         "inconclusive", 1e-12, 0)
    monkeypatch.setattr(cli, "run_suite", lambda *a, **k: [bad])
    assert run(["verify", "--dims", "2"]) == 1
    monkeypatch.setattr(cli, "run_suite", lambda *a, **k: [inc])
    assert run(["verify", "--dims", "2"]) == 0


def test_console_script_usage_error():
    proc = subprocess.run([sys.executable, "-m", "ltlab.cli", "verify", "--suite", "nope"],
                          capture_output=True, text=True)
    assert proc.returncode == 2 and "nope" in proc.stderr


# verify output ----------------------------------------------------------------

def test_verify_core_writes_csv(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert run(["verify", "--suite", "core", "--dims", "2,3", "--seed", "7", "--out", str(out)]) == 0
    text = out.read_text()
    assert text.splitlines()[0] == ",".join(reports.CHECK_HEADER)
    reps = reports.read_checks_csv(text)
    assert reps and all(r.status == "pass" for r in reps)
    assert {r.dim for r in reps} == {2, 3}
    printed = capsys.readouterr().out.splitlines()
    assert len(printed) == len(reps) + 1


def test_csv_reproducible_apart_from_runtime(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert run(["verify", "--suite", "radial", "--dims", "2", "--seed", "3",
                    "--out", str(path)]) == 0
    assert without_runtime(a.read_text()) == without_runtime(b.read_text())


def test_csv_uses_seventeen_digits():
    rep = vf.CheckReport("link", 2, FamilyParams("bump").as_record(), 0.1, 2.0 / 3.0,
                         2.0 / 3.0 - 0.1, "pass", 1e-12, 5)
    text = reports.checks_to_csv([rep])
    row = text.splitlines()[1].split(",")
    assert row[4] == "0.66666666666666663"
    assert reports.read_checks_csv(text) == [rep]


def test_json_round_trip(tmp_path):
    out = tmp_path / "r.json"
    assert run(["verify", "--suite", "scalars", "--dims", "2", "--seed", "1", "--out", str(out)]) == 0
    reps = reports.read_checks_json(out.read_text())
    fresh = vf.run_suite("scalars", [2], seed=1)
    assert [dataclasses.replace(r, runtime_ms=0) for r in reps] == \
        [dataclasses.replace(r, runtime_ms=0) for r in fresh]
    assert reports.read_checks_json(reports.checks_to_json(reps)) == reps


def test_read_rejects_foreign_csv():
    with pytest.raises(ValueError):
        reports.read_checks_csv("a,b\n1,2\n")


# eval / probe / sweep ---------------------------------------------------------

def test_eval_leray_bump(tmp_path):
    out = tmp_path / "e.json"
    assert run(["eval", "--functional", "leray", "--family", "kind=bump", "--dims", "2,3",
                "--out", str(out)]) == 0
    rows = json.loads(out.read_text())["evaluations"]
    assert [r["dim"] for r in rows] == [2, 3]
    for r in rows:
        assert r["value"] == pytest.approx(LERAY_BUMP[r["dim"]], rel=1e-9)


@pytest.mark.parametrize("functional", cli.FUNCTIONALS)
def test_eval_every_functional(functional, tmp_path):
    out = tmp_path / "e.csv"
    args = ["eval", "--functional", functional, "--dims", "3", "--q", "6", "--alpha", "2",
            "--family", "kind=ft_admissible", "--out", str(out)]
    assert run(args) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 1 and float(rows[0]["value"]) >= 0


def test_probe_example(tmp_path):
    out = tmp_path / "p.json"
    assert run(["probe", "--dim", "2", "--beta", "0.25", "--alpha", "1.0", "--eps",
                "0.1,0.03,0.01,0.003,0.001", "--out", str(out)]) == 0
    rep = reports.read_probe_json(out.read_text())
    assert rep.verdict == "diverging" and rep.eps_grid == [0.1, 0.03, 0.01, 0.003, 0.001]


def test_probe_csv(tmp_path):
    out = tmp_path / "p.csv"
    assert run(["probe", "--dim", "2", "--beta", "0.5", "--alpha", "2", "--eps", "0.3,0.1",
                "--family", "kind=hardy_eps", "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert [float(r["eps"]) for r in rows] == [0.3, 0.1]
    assert {r["family"] for r in rows} == {"hardy_eps"}


def test_sweep_alpha(tmp_path):
    out = tmp_path / "s.csv"
    assert run(["sweep", "--param", "alpha", "--range", "1:3:3", "--functional", "moser",
                "--dims", "2", "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert [float(r["param_value"]) for r in rows] == [1.0, 2.0, 3.0]
    values = [float(r["value"]) for r in rows]
    assert values == sorted(values)


def test_sweep_family_parameter(tmp_path):
    out = tmp_path / "s.json"
    assert run(["sweep", "--param", "order", "--range", "2:4:3", "--functional", "leray",
                "--dims", "2", "--out", str(out)]) == 0
    rows = json.loads(out.read_text())["evaluations"]
    assert ["order=2" in r["family"] for r in rows] == [True, False, False]


def test_family_column_round_trip():
    rec = dict(vf.suite_members(3, 7, "nonradial")[0].as_record(), q=5)
    assert reports.parse_family(reports.describe_family(rec)) == rec
    scalars = {"kind": "scalars", "seed": 7, "member": 3}
    assert reports.parse_family(reports.describe_family(scalars)) == scalars
    assert reports.describe_family({}) == "" and reports.parse_family("") == {}
