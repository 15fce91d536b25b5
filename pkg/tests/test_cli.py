import json
import os
import subprocess
import sys
from fractions import Fraction as F

import pytest

from qsf.cli import main, parse_value, parse_values


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def report(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    return code, json.loads(out)


class TestParsing:
    def test_values(self):
        assert parse_value("3") == 3
        assert parse_value("1/4") == F(1, 4)
        assert parse_value("0.5") == 0.5
        assert parse_value("inf") == float("inf")
        assert parse_values("0..3") == [0, 1, 2, 3]
        assert parse_values("0.5,1/3") == [0.5, F(1, 3)]


class TestVerify:
    def test_add_p_passes(self, capsys):
        code, rep = report(capsys, "verify", "--suite", "ADD-P", "--grid", "n=0..3")
        assert code == 0
        assert rep["schema"] == "qsf-report/1"
        s = rep["summary"]
        assert s["total"] == s["passed"] > 0 and s["failed"] == 0

    def test_flip_sign_fails(self, capsys):
        code, rep = report(capsys, "verify", "--suite", "RV", "--negative-control", "flip")
        assert code == 1 and rep["summary"]["failed"] > 0

    def test_perturb_fails(self, capsys):
        code, _ = report(capsys, "verify", "--suite", "ADD-R", "--grid", "n=3", "--negative-control", "perturb")
        assert code == 1

    @pytest.mark.parametrize("argv", [
        ["verify"],
        ["verify", "--suite"],
        ["verify", "--suite", "NOPE"],
        ["verify", "--suite", "BIORTHO", "--mode", "exact"],
        ["verify", "--suite", "ADD-R", "--grid", "n=12"],
        ["verify", "--suite", "ADD-R", "--workers", "0"],
    ])
    def test_usage_errors(self, capsys, argv):
        assert run(capsys, *argv)[0] == 2

    def test_mode_both_and_exact_rationals(self, capsys):
        code, rep = report(capsys, "verify", "--suite", "STRING", "--mode", "both", "--grid", "n=2")
        assert code == 0
        modes = {r["mode"] for r in rep["records"]}
        assert modes == {"double", "exact"}
        exact = [r for r in rep["records"] if r["mode"] == "exact"]
        assert all(r["lhs"] == r["rhs"] for r in exact)

    def test_comma_separated_suite(self, capsys):
        code, rep = report(capsys, "verify", "--suite", "RAT-SYM,STRING", "--grid", "n=1")
        assert code == 0 and set(rep["summary"]["per_identity"]) == {"RAT-SYM", "STRING"}

    def test_config_file_and_flag_precedence(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"suite": ["ADD-R"], "grid": {"n": [1]}, "mode": "exact"}))
        code, rep = report(capsys, "verify", "--config", str(cfg), "--mode", "double")
        assert code == 0
        assert {r["mode"] for r in rep["records"]} == {"double"}
        assert {r["point"]["n"] for r in rep["records"]} == {"1"}

    def test_sample_is_seeded(self, capsys):
        argv = ["verify", "--suite", "ADD-R", "--sample", "7", "--seed", "3"]
        _, a = report(capsys, *argv)
        _, b = report(capsys, *argv)
        _, c = report(capsys, "verify", "--suite", "ADD-R", "--sample", "7", "--seed", "4")
        assert len(a["records"]) == 7 and a == b
        assert [r["point"] for r in a["records"]] != [r["point"] for r in c["records"]]

    def test_out_file(self, capsys, tmp_path):
        out = tmp_path / "r.json"
        code, stdout, _ = run(capsys, "verify", "--suite", "RAT-SYM", "--grid", "n=1", "--out", str(out))
        assert code == 0
        assert json.loads(out.read_text())["summary"]["failed"] == 0

    def test_timing_is_opt_in(self, capsys):
        _, rep = report(capsys, "verify", "--suite", "RAT-SYM", "--grid", "n=1")
        assert "wall_time_s" not in json.dumps(rep)
        _, rep = report(capsys, "verify", "--suite", "RAT-SYM", "--grid", "n=1", "--timing")
        assert "wall_time_s" in json.dumps(rep)


def _cli(*argv, workers=None):
    env = dict(os.environ)
    if workers is not None:
        env["QSF_WORKERS"] = str(workers)
    return subprocess.run([sys.executable, "-m", "qsf", *argv], capture_output=True, env=env, check=False)


def test_reports_are_deterministic_across_runs_and_workers():
    argv = ["verify", "--suite", "ADD-R", "GEG", "--grid", "n=0..2"]
    a = _cli(*argv, workers=1)
    b = _cli(*argv, workers=1)
    c = _cli(*argv, workers=3)
    assert a.returncode == b.returncode == c.returncode == 0
    assert a.stdout == b.stdout
    ra, rc = json.loads(a.stdout), json.loads(c.stdout)
    assert rc["config"]["workers"] == 3
    ra["config"].pop("workers"), rc["config"].pop("workers")
    assert ra == rc


class TestEval:
    def _value(self, capsys, *argv):
        code, out, _ = run(capsys, "eval", *argv)
        assert code == 0
        return json.loads(out)

    def test_qgamma(self, capsys):
        d = self._value(capsys, "qgamma", "z=1", "q=0.5")
        assert float(d["value"]) == 1 and d["mode"] == "double" and "rel_tol" in d

    def test_rational_p_greek(self, capsys):
        d = self._value(capsys, "rational_p", "n=0", "α=0", "β=0", "t=1", "q=0.5")
        assert float(d["value"]) == 1

    def test_aw_p_exact(self, capsys):
        d = self._value(capsys, "aw_p", "n=2", "x=1/3", "a=1/2", "b=1/3", "c=1/5", "d=2/7", "q=1/4", "--mode", "exact")
        assert "/" in d["value"] and d["mode"] == "exact"

    def test_unknown_name(self, capsys):
        assert run(capsys, "eval", "nope", "x=1")[0] == 2

    def test_missing_parameter(self, capsys):
        assert run(capsys, "eval", "qgamma", "z=1")[0] == 2


class TestLimitScan:
    def test_default(self, capsys):
        code, rep = report(capsys, "limit-scan", "--id", "ADD->GEG")
        assert code == 0
        gaps = [r["gap"] for r in rep["records"]]
        assert [r["j"] for r in rep["records"]] == list(range(2, 11))
        assert rep["summary"]["decreasing_tail"] and gaps[-1] < 1e-2

    def test_degree_zero(self, capsys):
        code, rep = report(capsys, "limit-scan", "--id", "ADD->GEG", "n=0")
        assert code == 0 and all(r["gap"] == 0 for r in rep["records"])

    def test_arrow_alias(self, capsys):
        assert run(capsys, "limit-scan", "--id", "QBESSEL-ADD→classical", "--jmax", "8")[0] == 0

    @pytest.mark.parametrize("argv", [["--id", "NOPE"], ["--id", "ADD->GEG", "bogus=1"]])
    def test_bad_input(self, capsys, argv):
        assert run(capsys, "limit-scan", *argv)[0] == 2


def test_list_identities(capsys):
    code, out, _ = run(capsys, "list-identities")
    assert code == 0 and "ADD-P" in out and "Eq" in out
    code, out, _ = run(capsys, "list-identities", "--json")
    rows = json.loads(out)
    ids = {r["id"] for r in rows}
    assert {"ADD-R", "BIORTHO", "MOMENT", "ADD->GEG"} <= ids
    assert all(r["anchor"] for r in rows)
