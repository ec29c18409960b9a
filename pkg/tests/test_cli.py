from __future__ import annotations

import csv
import io
import json
import subprocess
import sys

import pytest

from heatmono.cli import main

DELTA0 = '{"dim":1,"atoms":[{"x":[0],"w":1}]}'


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


class TestSweep:
    def test_family_a_q3_decreases_initially(self, capsys):
        code, out, _ = run(["sweep", "--family", "A", "--q", "3", "--r", "0.4", "--p", "1",
                            "--tmin", "1e-3", "--tmax", "1e-1", "--tcount", "50", "--tscale", "log"], capsys)
        assert code == 10
        data = json.loads(out)
        assert data["verdict"] == "strictly-decreasing-initially"
        assert len(data["points"]) == 50
        assert data["decreasing_interval"][0] == pytest.approx(1e-3)

    def test_same_measure_q4_nondecreasing(self, capsys):
        code, out, _ = run(["sweep", "--family", "A", "--gen-q", "3", "--q", "4",
                            "--tmin", "1e-3", "--tmax", "10", "--tcount", "100"], capsys)
        assert code == 0
        assert json.loads(out)["verdict"] == "nondecreasing"

    def test_delta0_nondecreasing(self, capsys):
        code, out, _ = run(["sweep", "--measure", DELTA0, "--q", "3", "--tmin", "1e-3", "--tmax", "10",
                            "--tcount", "20", "--format", "csv"], capsys)
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert list(rows[0]) == ["t", "Q", "dQq_dt", "route"]
        assert len(rows) == 20
        for r in rows:
            assert float(r["Q"]) == pytest.approx(3 ** (-1 / 6), rel=1e-9)

    def test_measure_from_file_and_out(self, tmp_path, capsys):
        path = tmp_path / "m.json"
        path.write_text(DELTA0)
        out_path = tmp_path / "o.csv"
        code, out, _ = run(["sweep", "--measure", str(path), "--q", "3", "--tmin", "0.1", "--tmax", "1",
                            "--tcount", "3", "--format", "csv", "--out", str(out_path)], capsys)
        assert code == 0 and out == ""
        assert out_path.read_text().startswith("t,Q,dQq_dt,route\n")

    def test_deterministic(self, capsys):
        argv = ["sweep", "--family", "B", "--q", "3", "--p", "3/2", "--tmin", "0.05", "--tmax", "0.5",
                "--tcount", "4", "--format", "csv"]
        _, first, _ = run(argv, capsys)
        _, second, _ = run(argv + ["--workers", "3"], capsys)
        assert first == second

    def test_tol_from_environment(self, capsys, monkeypatch):
        monkeypatch.setenv("HEATMONO_TOL", "1e-9")
        _, out, _ = run(["sweep", "--measure", DELTA0, "--q", "3", "--tmin", "0.1", "--tmax", "1",
                         "--tcount", "2"], capsys)
        assert json.loads(out)["rtol"] == 1e-9


class TestCertificate:
    def test_family_a(self, capsys):
        code, out, _ = run(["certificate", "--q", "3"], capsys)
        assert code == 0
        data = json.loads(out)
        cert = data["certificate"]
        assert cert["conclusive"] and cert["negative"]
        assert cert["value"] + cert["tail_bound"] < 0
        assert data["cross_check"]["agrees"]
        assert data["sign_structure"]["passed"]

    def test_family_b(self, capsys):
        code, out, _ = run(["certificate", "--q", "3", "--family", "B"], capsys)
        assert code == 0
        data = json.loads(out)
        assert data["parameters"]["r"] == 0.25
        assert data["certificate"]["negative"]

    def test_even_q_is_usage_error(self, capsys):
        code, _, err = run(["certificate", "--q", "4"], capsys)
        assert code == 64
        assert "even" in err

    def test_inconclusive_exit(self, capsys):
        code, out, _ = run(["certificate", "--q", "3", "--kmax", "2", "--klimit", "2"], capsys)
        assert code == 12
        assert json.loads(out)["certificate"]["conclusive"] is False


class TestLemmasAndBL:
    def test_lemmas_7_9(self, capsys):
        code, out, _ = run(["lemmas", "--m", "7", "--n", "9", "--kmax", "20"], capsys)
        assert code == 0
        reports = json.loads(out)["reports"]
        assert len(reports) == 2

    def test_lemmas_not_coprime(self, capsys):
        code, _, _ = run(["lemmas", "--m", "6", "--n", "9"], capsys)
        assert code == 64

    def test_blcheck(self, capsys):
        code, out, _ = run(["blcheck", "--k", "2", "--d", "1"], capsys)
        assert code == 0
        data = json.loads(out)
        assert data["p"] == "4/3"
        assert all(c["pass"] and c["residual"] == "0" for c in data["checks"])
        assert [c["j"] for c in data["checks"] if c["j"] is not None] == [1, 2, 3, 4]


class TestCoeffs:
    def test_delta0_csv(self, capsys):
        code, out, _ = run(["coeffs", "--measure", DELTA0, "--q", "3", "--nmax", "5"], capsys)
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ["n", "c_n", "err"]
        values = {int(r[0]): float(r[1]) for r in rows[1:]}
        assert values[0] == pytest.approx(1.0)
        assert all(abs(v) < 1e-12 for n, v in values.items() if n != 0)

    def test_json(self, capsys):
        code, out, _ = run(["coeffs", "--family", "A", "--q", "3", "--nmax", "2", "--format", "json"], capsys)
        assert code == 0
        json.loads(out)


class TestErrors:
    def test_missing_measure(self, capsys):
        assert run(["sweep", "--q", "3"], capsys)[0] == 64

    def test_both_measure_sources(self, capsys):
        assert run(["sweep", "--q", "3", "--measure", DELTA0, "--family", "A"], capsys)[0] == 64

    def test_bad_json(self, capsys):
        assert run(["sweep", "--q", "3", "--measure", '{"dim":1}'], capsys)[0] == 64

    def test_negative_weight(self, capsys):
        bad = '{"dim":1,"atoms":[{"x":[0],"w":-1}]}'
        assert run(["sweep", "--q", "3", "--measure", bad], capsys)[0] == 64

    def test_bad_grid(self, capsys):
        assert run(["sweep", "--q", "3", "--measure", DELTA0, "--tmin", "1", "--tmax", "0.5"], capsys)[0] == 64

    def test_unknown_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["bogus"])
        assert exc.value.code == 64

    def test_numeric_failure_diagnostic(self, capsys):
        wide = '{"dim":1,"atoms":[{"x":[0],"w":1},{"x":[500],"w":1}]}'
        code, _, err = run(["sweep", "--measure", wide, "--q", "3", "--p", "1.5", "--tmin", "1",
                            "--tmax", "2", "--tcount", "2", "--tol", "1e-14"], capsys)
        assert code == 65
        diag = json.loads(err.strip().splitlines()[-1])
        assert diag["error"] == "DomainTooWide"
        assert diag["index"] == 0

    def test_help_documents_exit_codes(self):
        res = subprocess.run([sys.executable, "-m", "heatmono", "--help"], capture_output=True, text=True)
        assert res.returncode == 0
        for code in ("10", "11", "12", "64", "65"):
            assert code in res.stdout
