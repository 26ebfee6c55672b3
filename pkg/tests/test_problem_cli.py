import csv
import json
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from contactjets import cli
from contactjets import report as R
from contactjets.errors import InputError
from contactjets.problem import load_problem

SPECS = Path(__file__).resolve().parent.parent / "specs"


def spec(name):
    return json.loads((SPECS / name).read_text())


def write(tmp_path, obj, name="spec.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return p


# ------------------------------------------------------------ input errors

def test_malformed_json_reports_line_and_column(tmp_path):
    p = write(tmp_path, '{\n  "schema_version": 1,\n  "dims": {"N": 2,, "n": 1}\n}')
    with pytest.raises(InputError, match=r"line 3, column"):
        load_problem(p)


def test_schema_error_names_the_field(tmp_path):
    s = spec("kinked_line.json")
    s["dims"]["N"] = "two"
    with pytest.raises(InputError, match=r"dims\.N"):
        load_problem(write(tmp_path, s))


def test_point_dimension_checked(tmp_path):
    s = spec("kinked_line.json")
    s["points"] = [[0.0, 1.0]]
    with pytest.raises(InputError, match="points"):
        load_problem(write(tmp_path, s))


def test_duplicate_ids_rejected(tmp_path):
    s = spec("kinked_line.json")
    s["candidates"][1]["id"] = "sweep"
    with pytest.raises(InputError, match="duplicate id"):
        load_problem(write(tmp_path, s))


def test_input_error_exit_code(tmp_path, capsys):
    assert cli.main(["run", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == R.EXIT_INPUT
    s = spec("ellipticity.json")
    s["candidates"][0]["system"]["name"] = "no_such_system"
    assert cli.main(["run", str(write(tmp_path, s)), "--out", str(tmp_path)]) == R.EXIT_INPUT
    assert "input error" in capsys.readouterr().err


# ------------------------------------------------------------ exit codes

def test_exit_code_rules():
    assert R.exit_code([]) == R.EXIT_INCONCLUSIVE
    assert R.exit_code(["passed", "passed"]) == R.EXIT_OK
    assert R.exit_code(["passed", "inconclusive"]) == R.EXIT_INCONCLUSIVE
    assert R.exit_code(["inconclusive", "violated"]) == R.EXIT_VIOLATED


def test_run_ok(tmp_path):
    assert cli.main(["run", str(SPECS / "kinked_line.json"), "--out", str(tmp_path)]) == R.EXIT_OK


def test_run_violated_then_replay(tmp_path, capsys):
    assert cli.main(["run", str(SPECS / "ellipticity.json"), "--out", str(tmp_path)]) == R.EXIT_VIOLATED
    rep = json.loads((tmp_path / "report.json").read_text())
    statuses = {c["id"]: c["status"] for c in rep["checks"]}
    assert statuses["mutant"] == "violated" and statuses["laplacian"] == "passed"
    capsys.readouterr()
    assert cli.main(["replay", str(tmp_path / "report.json"), "--check", "mutant"]) == 0
    assert "reproduced" in capsys.readouterr().out
    assert cli.main(["replay", str(tmp_path / "report.json"), "--check", "nope"]) == R.EXIT_INPUT


def test_strict_tolerance_turns_inconclusive(tmp_path):
    code = cli.main(["run", str(SPECS / "kinked_line.json"), "--out", str(tmp_path), "--tol", "1e-12"])
    assert code == R.EXIT_INCONCLUSIVE
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["spec"]["schedule"]["decay_tol"] == 1e-12
    assert "inconclusive" in {c["status"] for c in rep["checks"]}


def test_tampered_report_differs(tmp_path, capsys):
    cli.main(["run", str(SPECS / "kinked_line.json"), "--out", str(tmp_path)])
    path = tmp_path / "report.json"
    rep = json.loads(path.read_text())
    rep["checks"][1]["status"] = "violated"
    path.write_text(json.dumps(rep))
    assert cli.main(["replay", str(path), "--check", "inside"]) == 1
    assert "DIFFERS" in capsys.readouterr().out


# ------------------------------------------------------------ artefacts

def test_reports_are_deterministic():
    a = cli.run_spec(SPECS / "oscillating_line.json")
    b = cli.run_spec(SPECS / "oscillating_line.json")
    assert R.canonical(a) == R.canonical(b)
    assert "timing" in a and "timing" not in json.loads(R.canonical(a))
    for key in ("schema_version", "versions", "seed", "checks", "summary", "exit_code"):
        assert key in a


def test_seed_override_is_recorded():
    rep = cli.run_spec(SPECS / "kinked_line.json", seed=7)
    assert rep["seed"] == 7


def test_decay_csv_and_plots(tmp_path):
    assert cli.main(["run", str(SPECS / "holder_ridge.json"), "--out", str(tmp_path), "--plots"]) == R.EXIT_OK
    with open(tmp_path / "decay.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["check_id", "radius", "max_ratio"]
    assert len(rows) > 1
    svgs = sorted(tmp_path.glob("*.svg"))
    assert svgs
    for f in svgs:
        root = ET.parse(f).getroot()
        assert root.tag.endswith("svg")


def test_parser_requires_check_for_replay():
    with pytest.raises(SystemExit):
        cli.build_parser().parse_args(["replay", "r.json"])
