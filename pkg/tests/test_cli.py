import csv
import json
import math
import subprocess
import sys

import pytest

from bivcpe import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0
    assert "bivcpe" in capsys.readouterr().out


def test_fmt():
    assert cli.fmt(math.pi) == "3.14159265"
    assert cli.fmt_err(0.000123456) == "0.00012"


# -- eval --------------------------------------------------------------------

def test_eval_triangle_cpe(capsys, tmp_path):
    out_file = tmp_path / "r.json"
    code, out, _ = run(capsys, "eval", "--model", "triangle", "--measure", "bivariate_cpe",
                       "--out", str(out_file))
    assert code == 0
    assert "0.227284273" in out
    payload = json.loads(out_file.read_text())
    assert payload["schema"] == 1
    (rep,) = payload["reports"]
    assert rep["value"] == pytest.approx(11 / 24 - math.log(2) / 3, abs=1e-9)


def test_eval_triangle_shannon(capsys):
    code, out, _ = run(capsys, "eval", "--model", "triangle", "--measure", "shannon_joint")
    assert code == 0 and "-0.693147181" in out


def test_eval_uniform_cdcpe(capsys):
    code, out, _ = run(capsys, "eval", "--model", "independent_uniform", "--measure",
                       "cdcpe_interval", "--i", "1", "--t1", "0.6", "--t2", "0.3")
    assert code == 0
    assert " 0.15 " in out or out.rstrip().split("±")[0].strip().endswith("0.15")


def test_eval_both_components(capsys):
    code, out, _ = run(capsys, "eval", "--model", "linear_density", "--measure", "eit",
                       "--t1", "1", "--t2", "0.5")
    assert code == 0 and "i=1" in out and "i=2" in out


def test_eval_json_model_spec(capsys):
    spec = json.dumps({"family": "log_interaction_uniform", "params": {"theta": 0.0}})
    code, out, _ = run(capsys, "eval", "--model", spec, "--measure", "cdcpe_interval",
                       "--i", "2", "--t1", "0.5", "--t2", "0.8")
    assert code == 0 and "0.2" in out


@pytest.mark.parametrize("argv", [
    ["eval", "--model", "no_such_model"],
    ["eval", "--model", "triangle", "--measure", "no_such_measure"],
    ["eval", "--model", "triangle", "--measure", "eit", "--i", "1"],
    ["eval", "--model", "triangle", "--measure", "eit", "--i", "1", "--t1", "0.5"],
    ["eval", "--model", "triangle", "--measure", "eit", "--i", "1", "--t1", "3", "--t2", "0.5"],
    ["check"],
    ["check", "--id", "no_such_check"],
    ["scan", "--model", "triangle", "--grid", "1"],
    ["scan", "--model", "triangle", "--t1-range", "0.5"],
])
def test_config_errors_exit_2(capsys, argv):
    code = None
    try:
        code = cli.main(argv)
    except SystemExit as exc:  # argparse rejects malformed values itself
        code = exc.code
    assert code == 2


def test_numerical_failure_exit_3(capsys):
    # on the triangle, the slice X2 = 0.3 carries no mass below X1 = 0.2
    code, _, err = run(capsys, "eval", "--model", "triangle", "--measure", "cdcpe_exact",
                       "--i", "1", "--t1", "0.2", "--t2", "0.3")
    assert code == 3 and "numerical failure" in err


# -- scan --------------------------------------------------------------------

def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_scan_header_and_order(capsys, tmp_path):
    out = tmp_path / "s.csv"
    code, _, _ = run(capsys, "scan", "--model", "extreme_value_b", "--measure", "cdcpe_interval",
                     "--grid", "3", "--out", str(out))
    assert code == 0
    rows = _read_csv(out)
    assert rows[0] == ["t1", "t2", "measure", "i", "value", "est_error"]
    body = rows[1:]
    assert len(body) == 3 * 3 * 2
    keys = [(float(r[0]), float(r[1]), int(r[3])) for r in body]
    assert keys == sorted(keys)


def test_scan_evb_monotone_columns(capsys, tmp_path):
    out = tmp_path / "evb.csv"
    run(capsys, "scan", "--model", "extreme_value_b", "--measure", "cdcpe_interval",
        "--grid", "5", "--out", str(out))
    rows = [(float(r[0]), float(r[1]), int(r[3]), float(r[4])) for r in _read_csv(out)[1:]]
    for i, own in ((1, 0), (2, 1)):
        other = 1 - own
        for fixed in sorted({r[other] for r in rows}):
            col = sorted((r[own], r[3]) for r in rows if r[2] == i and r[other] == fixed)
            vals = [v for _, v in col]
            assert all(b > a for a, b in zip(vals, vals[1:]))


def test_scan_reciprocal_difference(capsys, tmp_path):
    out = tmp_path / "rec.csv"
    code, _, _ = run(capsys, "scan", "--model", "reciprocal_f", "--model2", "reciprocal_g",
                     "--measure", "cdcpe_interval", "--grid", "5", "--out", str(out))
    assert code == 0
    diffs = [float(r[4]) for r in _read_csv(out)[1:]]
    assert len(diffs) == 50
    # the sign pattern of these differences is what the order verdict summarizes
    assert max(diffs) > 0


def test_scan_linear_density_cond_gap(capsys, tmp_path):
    out = tmp_path / "ld.csv"
    code, _, _ = run(capsys, "scan", "--model", "linear_density", "--measure", "cond_eit",
                     "--minus", "cdcpe_exact", "--grid", "4", "--out", str(out))
    assert code == 0
    rows = _read_csv(out)[1:]
    assert {r[2] for r in rows} == {"cond_eit-cdcpe_exact"}
    assert all(float(r[4]) > 0 for r in rows)


def test_scan_is_bit_stable(capsys, tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        run(capsys, "scan", "--model", "triangle", "--measure", "cdcpe_interval",
            "--measure", "eit", "--grid", "3", "--out", str(p))
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_scan_stdout(capsys):
    code, out, _ = run(capsys, "scan", "--model", "independent_uniform", "--measure",
                       "cdcpe_interval", "--i", "1", "--grid", "2")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "t1,t2,measure,i,value,est_error" and len(lines) == 5
    assert lines[1].split(",")[4] == "0.025"


# -- check -------------------------------------------------------------------

def test_check_crude_bound_triangle(capsys, tmp_path):
    out = tmp_path / "c.json"
    code, text, _ = run(capsys, "check", "--id", "crude_lower_bound", "--model", "triangle",
                        "--out", str(out))
    assert code == 0 and text.startswith("PASS")
    payload = json.loads(out.read_text())
    assert payload["schema"] == 1 and payload["failed"] == 0
    (res,) = payload["results"]
    assert res["values"]["bound"] == pytest.approx(23 / 180, abs=1e-8)


def test_check_monotonicity_evb(capsys):
    code, text, _ = run(capsys, "check", "--id", "monotonicity_iff", "--model", "extreme_value_b")
    assert code == 0
    assert "0 failed" in text


def test_check_failure_exit_1(capsys, monkeypatch):
    from bivcpe import theorems
    from bivcpe.distributions import EvalPoint

    bad = theorems.CheckResult("crude_lower_bound", "triangle", "fail", 1.0, EvalPoint(0.5, 0.5),
                               1e-6, 1)
    monkeypatch.setattr(theorems, "run_suite", lambda models, ids: [bad])
    code, text, _ = run(capsys, "check", "--id", "crude_lower_bound", "--model", "triangle")
    assert code == 1 and "1 failed" in text


@pytest.fixture(scope="module")
def full_suite():
    proc = subprocess.run([sys.executable, "-m", "bivcpe.cli", "check", "--all"],
                          capture_output=True, text=True, timeout=900)
    return proc


def test_check_all(full_suite):
    assert full_suite.returncode == 0, full_suite.stdout[-3000:]
    assert full_suite.stdout.rstrip().splitlines()[-1].split(",")[1].strip() == "0 failed"


# -- order -------------------------------------------------------------------

def test_order_self_equal(capsys):
    code, out, _ = run(capsys, "order", "--model", "triangle", "--grid", "3")
    assert code == 0
    payload = json.loads(out)
    assert payload["schema"] == 1 and payload["direction"] == "equal"
    assert payload["certification"] == "grid-certified"


def test_order_reciprocal_pair_with_usual_st(capsys):
    code, out, _ = run(capsys, "order", "--model", "reciprocal_f", "--model2", "reciprocal_g",
                       "--also-usual-st")
    assert code == 0
    payload = json.loads(out)
    assert payload["direction"] in ("X_geq_Y", "Y_geq_X", "neither", "equal")
    assert payload["n_points"] == 81
    us = payload["usual_stochastic"]
    assert us["direction"] == "neither"
    assert us["extra"]["F1-G1@0.1"] == pytest.approx(0.015, abs=1e-9)
    assert us["extra"]["F1-G1@0.4"] < 0


def test_order_nested_supports_use_overlap(capsys):
    small = json.dumps({"family": "independent", "params": {
        "marginal1": {"kind": "uniform", "b": 0.5}, "marginal2": {"kind": "uniform", "b": 0.5}}})
    code, out, _ = run(capsys, "order", "--model", "independent_uniform", "--model2", small,
                       "--grid", "3")
    assert code == 0
    payload = json.loads(out)
    assert payload["grid"] == "3x3 on [0.025, 0.475] x [0.025, 0.475]"
    # on the common region both laws are uniform, so the conditional measures coincide
    assert payload["direction"] == "equal"
