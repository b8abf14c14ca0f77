import csv
import io
import json
import math
import subprocess
import sys

import pytest

from qubitqfim.cli import fmt, load_config, main

from conftest import LN2

MERIDIAN_W = "y*sin(x),0,y*cos(x)"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_config(tmp_path, body, name="scan.toml"):
    path = tmp_path / name
    path.write_text(body)
    return str(path)


DISSIPATIVE_SCAN = """
[model]
kind = "dissipative"
t = 1.0

[parameters.x]
min = 0.1
max = 0.9
count = 10

[parameters.gamma]
min = 0.1
max = 2.0
count = 10

[outputs]
format = "{fmt}"
path = "{path}"
"""

MERIDIAN_SCAN = """
[model]
kind = "bloch"
w = ["y*sin(x)", "0", "y*cos(x)"]

[parameters.x]
values = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5]

[parameters.y]
values = [0.3, 0.6]
"""


class TestCompute:
    def test_dissipative_json(self, capsys):
        code, out, err = run(capsys, "compute", "--model", "dissipative", "--t", "1", "--x", "0.5",
                             "--gamma", "0.693147", "--format", "json")
        assert code == 0 and err == ""
        rep = json.loads(out)
        F = rep["F"]
        assert F[0][0] == pytest.approx(1 / 3, abs=1e-4)
        assert F[0][1] == pytest.approx(-2 / 3, abs=1e-4)
        assert F[1][1] == pytest.approx(4 / 3, abs=1e-4)
        assert abs(rep["det"]) <= 1e-9
        assert rep["trace_bound"] == "unbounded"
        assert rep["verdict"] == "not-jointly-estimable"

    def test_meridian(self, capsys):
        code, out, _ = run(capsys, "compute", "--model", "bloch", "--w", MERIDIAN_W,
                           "--x", "0.523599", "--y", "0.5", "--format", "json")
        assert code == 0
        assert json.loads(out)["verdict"] == "jointly-estimable"

    def test_zero_time(self, capsys):
        code, out, _ = run(capsys, "compute", "--model", "dissipative", "--t", "0", "--x", "0.5",
                           "--gamma", "1", "--format", "json")
        F = json.loads(out)["F"]
        assert code == 0
        assert F[0] == [0.0, 0.0] and F[1][0] == 0.0
        assert F[1][1] == pytest.approx(4.0, abs=1e-8)

    def test_all_routes_text(self, capsys):
        code, out, _ = run(capsys, "compute", "--all-routes")
        assert code == 0
        for name in ("QFIM (sld)", "QFIM (spectral)", "QFIM (bloch)", "verdict", "combination"):
            assert name in out

    def test_eigen_model(self, capsys):
        code, out, _ = run(capsys, "compute", "--model", "eigen", "--lambda-expr", "0.2+0.1*x",
                           "--h-expr", "y", "--x", "0.3", "--y", "0.1", "--format", "json")
        assert code == 0
        assert json.loads(out)["verdict"] == "jointly-estimable"

    def test_out_file(self, capsys, tmp_path):
        path = tmp_path / "r.csv"
        code, out, _ = run(capsys, "compute", "--format", "csv", "--out", str(path))
        assert code == 0 and out == ""
        rows = list(csv.DictReader(io.StringIO(path.read_text())))
        assert rows[0]["trace_bound"] == "unbounded"


class TestScan:
    def test_dissipative_grid(self, capsys, tmp_path):
        out_path = tmp_path / "grid.csv"
        cfg = write_config(tmp_path, DISSIPATIVE_SCAN.format(fmt="csv", path=out_path))
        code, out, err = run(capsys, "scan", "--config", cfg)
        assert code == 0 and err == ""
        assert "100 rows" in out
        rows = list(csv.DictReader(io.StringIO(out_path.read_text())))
        assert len(rows) == 100
        assert {r["verdict"] for r in rows} == {"not-jointly-estimable"}
        # lexicographic over axes in config order: x outer, gamma inner
        assert [float(r["x"]) for r in rows[:10]] == [0.1] * 10
        assert float(rows[1]["gamma"]) > float(rows[0]["gamma"])

    def test_single_point_equals_compute(self, capsys, tmp_path):
        body = f"""
[model]
kind = "dissipative"
t = 1.0
[parameters.gamma]
values = [{LN2!r}]
[parameters.x]
values = [0.5]
"""
        cfg = write_config(tmp_path, body)
        code, out, _ = run(capsys, "scan", "--config", cfg, "--format", "json")
        assert code == 0
        scan_row = json.loads(out)[0]
        _, out2, _ = run(capsys, "compute", "--x", "0.5", "--gamma", repr(LN2), "--format", "json")
        assert scan_row == json.loads(out2)["row"]

    def test_meridian_flags_axis(self, capsys, tmp_path):
        cfg = write_config(tmp_path, MERIDIAN_SCAN)
        code, out, _ = run(capsys, "scan", "--config", cfg, "--format", "json")
        assert code == 0
        for r in json.loads(out):
            expected = "indeterminate" if abs(math.sin(r["x"])) < 1e-6 else "jointly-estimable"
            assert r["verdict"] == expected

    def test_csv_json_identical(self, capsys, tmp_path):
        cfg = write_config(tmp_path, MERIDIAN_SCAN)
        _, out_csv, _ = run(capsys, "scan", "--config", cfg, "--format", "csv")
        _, out_json, _ = run(capsys, "scan", "--config", cfg, "--format", "json")
        rows_csv = list(csv.DictReader(io.StringIO(out_csv)))
        rows_json = json.loads(out_json)
        assert len(rows_csv) == len(rows_json)
        for a, b in zip(rows_csv, rows_json):
            assert list(a) == list(b)
            for k, v in b.items():
                if isinstance(v, float):
                    assert fmt(float(a[k])) == v
                else:
                    assert a[k] == str(v)

    def test_crlf_and_quoting(self, capsys, tmp_path):
        cfg = write_config(tmp_path, MERIDIAN_SCAN)
        out_path = tmp_path / "m.csv"
        run(capsys, "scan", "--config", cfg, "--out", str(out_path))
        raw = out_path.read_bytes()
        assert raw.count(b"\r\n") == 13

    def test_byte_identical(self, capsys, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (a, b):
            cfg = write_config(tmp_path, DISSIPATIVE_SCAN.format(fmt="csv", path=p))
            assert run(capsys, "scan", "--config", cfg)[0] == 0
        assert a.read_bytes() == b.read_bytes()

    def test_unwritable(self, capsys, tmp_path):
        cfg = write_config(tmp_path, MERIDIAN_SCAN)
        code, _, err = run(capsys, "scan", "--config", cfg, "--out", str(tmp_path / "missing" / "x.csv"))
        assert code == 4 and "cannot write" in err
        assert list((tmp_path).glob(".qfim-*")) == []

    @pytest.mark.parametrize(
        "body",
        [
            "this is = = not toml",
            "[model]\nkind='dissipative'\n[parameters.x]\nmin=0.1\nmax=0.9\n[parameters.gamma]\nvalues=[1.0]",
            "[model]\nkind='dissipative'\n[parameters.x]\nvalues=[0.5]",
            "[model]\nkind='bloch'\nw=['x','0']\n[parameters.x]\nvalues=[0.1]\n[parameters.y]\nvalues=[0.1]",
            "[model]\nkind='nope'\n[parameters.x]\nvalues=[0.1]\n[parameters.y]\nvalues=[0.1]",
        ],
    )
    def test_bad_config(self, capsys, tmp_path, body):
        code, _, err = run(capsys, "scan", "--config", write_config(tmp_path, body))
        assert code == 2 and err

    def test_load_config_axes(self, tmp_path):
        cfg = load_config(write_config(tmp_path, DISSIPATIVE_SCAN.format(fmt="json", path="o.json")))
        assert list(cfg.axes) == ["x", "gamma"]
        assert cfg.axes["x"][0] == 0.1 and cfg.axes["x"][-1] == 0.9
        assert cfg.format == "json"


class TestCheckInvertibility:
    def test_dissipative_default(self, capsys):
        code, out, err = run(capsys, "check-invertibility")
        assert code == 10 and err == ""
        assert out.startswith("not-jointly-estimable condition_value=")
        assert out.count("\n") == 1

    def test_meridian(self, capsys):
        code, out, _ = run(capsys, "check-invertibility", "--model", "bloch", "--w", MERIDIAN_W,
                           "--x", str(math.pi / 6), "--y", "0.5")
        assert code == 0 and out.startswith("jointly-estimable")

    def test_constant(self, capsys):
        code, _, _ = run(capsys, "check-invertibility", "--model", "bloch", "--w", "0.1,0,0.2",
                         "--x", "0.1", "--y", "0.2")
        assert code == 10

    def test_indeterminate(self, capsys):
        code, out, _ = run(capsys, "check-invertibility", "--model", "bloch", "--w", MERIDIAN_W,
                           "--x", "0", "--y", "0.5")
        assert code == 11 and out.startswith("indeterminate")

    def test_arity(self, capsys):
        code, _, err = run(capsys, "check-invertibility", "--model", "bloch", "--w", "x,0,0", "--x", "0.1")
        assert code == 2 and "two" in err


class TestCombine:
    def test_dissipative(self, capsys):
        code, out, _ = run(capsys, "combine", "--format", "json")
        assert code == 0
        rep = json.loads(out)
        assert {"direction", "qfi", "description"} <= set(rep)
        assert rep["qfi"] == pytest.approx(5 / 3, abs=1e-8)
        assert [abs(v) for v in rep["direction"]] == pytest.approx([0.4472, 0.8944], abs=1e-4)

    def test_synthetic(self, capsys):
        code, out, _ = run(capsys, "combine", "--qfim", "3,0,0", "--format", "json")
        assert code == 0
        assert json.loads(out)["direction"] == [1.0, 0.0]

    def test_full_rank(self, capsys):
        code, _, err = run(capsys, "combine", "--qfim", "3,0,1")
        assert code == 12 and "no reduction needed" in err

    def test_zero(self, capsys):
        assert run(capsys, "combine", "--qfim", "0,0,0")[0] == 13

    def test_text(self, capsys):
        code, out, _ = run(capsys, "combine")
        assert code == 0 and "lambda_1 =" in out


class TestErrors:
    def test_domain(self, capsys):
        code, out, err = run(capsys, "compute", "--x", "1.5")
        assert code == 3 and out == "" and "domain" in err

    def test_bad_flag(self, capsys):
        assert run(capsys, "compute", "--bogus")[0] == 2

    def test_bad_expression(self, capsys):
        code, _, err = run(capsys, "compute", "--model", "bloch", "--w", "x+,0,0", "--x", "0.1")
        assert code == 2 and err

    def test_unknown_variable(self, capsys):
        code, _, _ = run(capsys, "compute", "--model", "bloch", "--w", "z,0,0", "--x", "0.1")
        assert code == 2

    def test_missing_model_pieces(self, capsys):
        assert run(capsys, "compute", "--model", "eigen", "--x", "0.1")[0] == 2
        assert run(capsys, "compute", "--model", "bloch", "--x", "0.1")[0] == 2

    def test_no_subcommand(self, capsys):
        assert run(capsys)[0] == 2

    def test_help_mentions_grammar(self, capsys):
        code, out, _ = run(capsys, "compute", "--help")
        assert code == 0 and "sqrt" in out


def test_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "qubitqfim.cli", "check-invertibility"], capture_output=True, text=True
    )
    assert proc.returncode == 10
    assert proc.stderr == ""
