import json
import subprocess
import sys

import pytest

from motivic_dt.cli import EXIT_BUDGET, EXIT_FAIL, EXIT_PASS, EXIT_USAGE, main


def run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr()


def test_cmps_table(capsys):
    code, out = run(["cmps", "--d", "2", "--p", "5", "--nmax", "2", "--kmax", "2"], capsys)
    assert code == EXIT_PASS
    assert out.out.rstrip().endswith("PASS")
    assert "n-independent" in out.out


def test_feit_fine_json(capsys, tmp_path):
    dest = tmp_path / "ff.json"
    code, _ = run(["feit-fine", "--q", "2,3", "--nmax", "2", "--format", "json", "--out", str(dest)], capsys)
    obj = json.loads(dest.read_text())
    assert code == EXIT_PASS and obj["pass"] is True and obj["check"] == "feit-fine"


def test_dimred_flags_infeasible_weighting(capsys):
    code, out = run(["dimred", "--poly", "x^2*t + x", "--p", "3", "--kmax", "2", "--format", "json"], capsys)
    obj = json.loads(out.out)
    assert code == EXIT_PASS
    assert obj["flags"]["weight_feasible"] is False
    assert [r["k"] for r in obj["rows"]] == [1, 2]


def test_dimred_from_quiver_file(capsys, tmp_path):
    f = tmp_path / "q.txt"
    f.write_text("vertices: 1\narrows: a 1 1, b 1 1, c 1 1\npotential: +1 a b c, -1 b a c, +1 c c\n")
    code, out = run(["dimred", "--quiver", str(f), "--n", "1", "--fiber", "a", "--p", "5",
                     "--format", "json"], capsys)
    obj = json.loads(out.out)
    assert code == EXIT_PASS and obj["flags"]["weight_feasible"] is True


def test_sigma_and_classes_csv(capsys):
    code, out = run(["sigma-oracle", "--d", "3", "--p", "7", "--nmax", "3", "--format", "csv"], capsys)
    assert code == EXIT_PASS and out.out.count("\n") == 4
    code, out = run(["classes", "--q", "2,3", "--nmax", "2"], capsys)
    assert code == EXIT_PASS


def test_preproj_default(capsys):
    code, out = run(["preproj", "--nmax", "1", "--kmax", "2"], capsys)
    assert code == EXIT_PASS and "omega=g" in out.out


@pytest.mark.parametrize("argv", [
    ["cmps", "--p", "4"],
    ["cmps", "--p", "5", "--nmax", "5"],
    ["cmps", "--p", "7"],
    ["feit-fine", "--q", "6"],
    ["dimred"],
    ["nonsense"],
    ["cmps", "--budget", "0"],
])
def test_usage_errors(argv, capsys):
    code, out = run(argv, capsys)
    assert code == EXIT_USAGE


def test_budget_exit_code_and_partial_report(capsys):
    code, out = run(["cmps", "--p", "5", "--nmax", "2", "--budget", "10", "--format", "json"], capsys)
    assert code == EXIT_BUDGET
    obj = json.loads(out.out)
    assert obj["partial"] is True and obj["pass"] is False


def test_failing_check_exits_one(capsys, monkeypatch):
    import motivic_dt.cli as cli
    from motivic_dt.dt import CheckReport
    from motivic_dt.cyclo import CyclotomicValue

    def bad(*a, **k):
        rep = CheckReport("cmps", {})
        rep.add(1, 1, CyclotomicValue.constant(5, 1), CyclotomicValue.constant(5, 2))
        return rep

    monkeypatch.setattr(cli, "check_cmps", bad)
    code, out = run(["cmps"], capsys)
    assert code == EXIT_FAIL and out.out.rstrip().endswith("FAIL")


def test_console_script_is_byte_deterministic():
    cmd = [sys.executable, "-m", "motivic_dt.cli", "cmps", "--nmax", "2", "--kmax", "2", "--format", "json"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and json.loads(a)["pass"] is True
