import csv
import json
import subprocess
import sys

import pytest

from ctlrp import io
from ctlrp.cli import main
from ctlrp.mip_export import read_lp
from fixtures import feasible_pair, two_depot_instance, two_depot_solution
from test_generator import SAMPLE


@pytest.fixture
def two_depot_files(tmp_path):
    inst = two_depot_instance()
    ip, sp = tmp_path / "two_depot.json", tmp_path / "two_depot_sol.json"
    io.write_json(io.instance_to_dict(inst), ip)
    io.write_json(io.solution_to_dict(two_depot_solution(inst)), sp)
    return ip, sp


def test_validate_feasible_exits_zero(two_depot_files, tmp_path, capsys):
    ip, sp = two_depot_files
    assert main(["validate", "--instance", str(ip), "--solution", str(sp)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["feasible"] and out["violations"] == []
    assert out["schema_version"] == io.SCHEMA_VERSION


def test_validate_reports_violations(two_depot_files, tmp_path, capsys):
    ip, _ = two_depot_files
    bad = tmp_path / "bad.json"
    sol = two_depot_solution(two_depot_instance())
    sol.assignment[0] = 3
    io.write_json(io.solution_to_dict(sol), bad)
    assert main(["validate", "--instance", str(ip), "--solution", str(bad)]) == 1
    out = json.loads(capsys.readouterr().out)
    assert not out["feasible"] and out["violations"][0]["rule"] == "coverage"


def test_unknown_subcommand_exits_two():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_missing_file_is_a_structured_error(capsys):
    assert main(["validate", "--instance", "/nonexistent.json", "--solution", "x.json"]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "FileNotFoundError"


def test_solve_is_deterministic(tmp_path):
    inst, _ = feasible_pair(6)
    ip = tmp_path / "i.json"
    io.write_json(io.instance_to_dict(inst), ip)
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        args = ["solve", "--instance", str(ip), "--strategy", "O2", "--runs", "3",
                "--seed", "5", "--time-limit", "0", "--out", str(out)]
        assert main(args + (["--workers", "2"] if k else [])) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    data = json.loads(outs[0])
    assert data["report"]["runs"] == 3
    sol = io.solution_from_dict(data["solution"])
    assert io.load_instance(ip).n_vehicles == len(sol.routes)


def test_solve_with_strategy_file(tmp_path):
    inst, _ = feasible_pair(2)
    ip, sp = tmp_path / "i.json", tmp_path / "s.json"
    io.write_json(io.instance_to_dict(inst), ip)
    sp.write_text(json.dumps({"layers": [["2opt", "Relocate"], ["DepotAssignment"]]}))
    out = tmp_path / "r.json"
    assert main(["solve", "--instance", str(ip), "--strategy", str(sp), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["strategy"]["layers"] == [["2opt", "relocate"], ["depot"]]


def test_report_gap_table(tmp_path):
    res = tmp_path / "res"
    res.mkdir()
    for name, h in (("a", 103.0), ("b", 100.0), ("c", 99.0)):
        (res / f"{name}.json").write_text(json.dumps({"instance": name, "report": {"h_min": h, "runs": 1}}))
    ref = tmp_path / "ref.json"
    ref.write_text(json.dumps({"a": 100, "b": 100, "c": 100}))
    out = tmp_path / "gap.csv"
    assert main(["report", "--results", str(res), "--reference", str(ref), "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [float(r["gap_percent"]) for r in rows] == pytest.approx([3.0, 0.0, -1.0])
    assert all(r["schema_version"] == str(io.SCHEMA_VERSION) for r in rows)


def test_generate_and_export(tmp_path):
    lrp = tmp_path / "src.dat"
    lrp.write_text(SAMPLE)
    inst_path = tmp_path / "gen.json"
    code = main(["generate", "--lrp-file", str(lrp), "--multiplier", "2", "--alpha", "2",
                 "--seed", "3", "--out", str(inst_path)])
    assert code == 0
    assert io.load_instance(inst_path).n_customers == 6
    lp = tmp_path / "m.lp"
    sample = tmp_path / "two_depot.json"
    io.write_json(io.instance_to_dict(two_depot_instance()), sample)
    assert main(["export", "--instance", str(sample), "--with-valid-inequalities", "off",
                 "--out", str(lp)]) == 0
    assert read_lp(lp).n_facilities == 4


def test_generate_bad_file(tmp_path, capsys):
    bad = tmp_path / "bad.dat"
    bad.write_text("3 2 0 0")
    assert main(["generate", "--lrp-file", str(bad)]) == 1
    assert json.loads(capsys.readouterr().err)["error"] == "LrpParseError"


def test_module_entry_point(two_depot_files):
    ip, sp = two_depot_files
    proc = subprocess.run([sys.executable, "-m", "ctlrp", "validate", "--instance", str(ip),
                           "--solution", str(sp)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
