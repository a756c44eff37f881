import io
import json
import subprocess
import sys

import numpy as np
import pytest

from nodalmc.cli import format_config_file, run
from nodalmc.io import read_field_sample


def call(argv, environ=None):
    out, err = io.StringIO(), io.StringIO()
    code = run(argv, environ=environ or {}, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_kacrice_constant():
    code, out, _ = call(["kacrice", "--dim", "2"])
    assert code == 0
    doc = json.loads(out)
    assert '"value": 2.2214414690' in out
    assert "Gamma" in doc["result"]["formula"]
    assert doc["schema"] == 1 and doc["seed"] == 0 and len(doc["fingerprint"]) == 16


def test_lattice_empty_set_is_not_an_error():
    code, out, _ = call(["lattice", "--arw", "3"])
    assert code == 0
    assert json.loads(out)["result"]["points"] == []


def test_lattice_window():
    code, out, _ = call(["lattice", "--window", "2,5,1"])
    res = json.loads(out)["result"]
    assert code == 0 and res["count"] == len(res["points"]) > 0


@pytest.mark.parametrize(
    "argv,token",
    [
        (["expectation", "--bogus", "3"], "--bogus"),
        (["expectation", "--m", "many"], "many"),
        (["expectation", "--law", "cauchy"], "cauchy"),
        (["expectation", "--ensemble", "cube"], "cube"),
        (["frobnicate"], "frobnicate"),
        ([], "subcommand"),
    ],
)
def test_usage_errors_exit_1_and_name_token(argv, token):
    code, out, err = call(argv)
    assert code == 1 and out == ""
    assert token in err


def test_numerical_failures_exit_2():
    assert call(["expectation", "--n", "3", "--m", "4"])[0] == 2
    assert call(["small-ball", "--m", "10"])[0] == 2
    assert call(["expectation", "--n", "65", "--grid", "16", "--m", "4"])[0] == 2


def test_output_is_byte_identical_across_runs():
    argv = ["expectation", "--n", "5", "--grid", "32", "--m", "6", "--richardson", "--seed", "4"]
    first, second = call(argv), call(argv)
    assert first[0] == 0 and first[1] == second[1]


def test_workers_do_not_change_output():
    argv = ["expectation", "--n", "5", "--grid", "32", "--m", "8"]
    a = json.loads(call(argv + ["--workers", "1"])[1])
    b = json.loads(call(argv + ["--workers", "2"])[1])
    assert a["result"] == b["result"] and a["fingerprint"] == b["fingerprint"]


def test_seed_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("seed=7\n# comment\nm=5\n")
    base = ["expectation", "--grid", "32", "--m", "4"]
    assert json.loads(call(base)[1])["seed"] == 0
    assert json.loads(call(base, {"NODAL_MC_SEED": "3"})[1])["seed"] == 3
    doc = json.loads(call(["expectation", "--grid", "32", "--config", str(cfg)], {"NODAL_MC_SEED": "3"})[1])
    assert doc["seed"] == 7 and doc["config"]["m"] == 5
    doc = json.loads(call(base + ["--config", str(cfg), "--seed", "9"], {"NODAL_MC_SEED": "3"})[1])
    assert doc["seed"] == 9 and doc["config"]["m"] == 4


def test_config_round_trip_reproduces_fingerprint(tmp_path):
    argv = ["expectation", "--ensemble", "torus-window", "--T", "12", "--grid", "64", "--m", "4", "--law", "two-point:0.3"]
    doc = json.loads(call(argv)[1])
    cfg = tmp_path / "echo.cfg"
    cfg.write_text(format_config_file(doc["config"]))
    again = json.loads(call(["expectation", "--config", str(cfg)])[1])
    assert again["fingerprint"] == doc["fingerprint"]
    assert again["result"] == doc["result"]


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour=blue\n")
    code, _, err = call(["expectation", "--config", str(bad)])
    assert code == 1 and "colour" in err


def test_out_and_formats(tmp_path):
    target = tmp_path / "k.json"
    code, out, _ = call(["kacrice", "--dim", "3", "--out", str(target)])
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["result"]["dimension"] == 3
    code, out, _ = call(["kacrice", "--format", "csv"])
    assert out.startswith("key,value\n") and "result.value,2.221441469" in out
    code, out, _ = call(["kacrice", "--format", "table"])
    assert "result.value" in out


def test_sample_exports(tmp_path):
    vals, contours = tmp_path / "f.csv", tmp_path / "c.csv"
    code, out, _ = call(
        ["sample", "--n", "13", "--grid", "64", "--index", "2", "--values-out", str(vals), "--contours", str(contours)]
    )
    assert code == 0
    res = json.loads(out)["result"]
    header, grid = read_field_sample(vals)
    assert grid.shape == (64, 64) and header["descriptor"]["stream_index"] == 2
    rows = np.loadtxt(contours, delimiter=",", skiprows=1)
    assert rows[:, 4].sum() == pytest.approx(res["nodal_length"], rel=1e-12)


def test_covariance_check_passes_on_small_run():
    code, out, _ = call(["covariance-check", "--ensemble", "arw", "--n", "25", "--grid", "64", "--m", "200"])
    res = json.loads(out)["result"]
    assert code == 0 and res["pass"] and len(res["rows"]) == 10


def test_small_ball_and_locality():
    code, out, _ = call(["small-ball", "--ensemble", "rwm", "--J", "64", "--m", "1000", "--tau", "0.05"])
    assert code == 0 and json.loads(out)["result"]["within_envelope"]
    code, out, _ = call(["locality-check", "--n", "25", "--grid", "128", "--m", "2"])
    assert code == 0 and json.loads(out)["result"]["mean_relative_discrepancy"] < 0.1


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "nodalmc.cli", "kacrice", "--dim", "2"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["value"] == pytest.approx(2.221441469079183)
    proc = subprocess.run([sys.executable, "-m", "nodalmc.cli", "kacrice", "--nope"], capture_output=True, text=True)
    assert proc.returncode == 1 and "--nope" in proc.stderr
