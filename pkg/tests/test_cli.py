import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from darkstate.cli import RunConfig, UsageError, config_to_dict, main, parse_config
from darkstate.model import SystemParams, initial_state_library
from darkstate.output import (
    SWEEP_COLUMNS,
    TRAJECTORY_COLUMNS,
    emit_csv,
    emit_heatmap,
    fmt,
    ramp,
    read_ppm,
)
from darkstate.steady import steady_concurrence
from darkstate.sweep import SweepSpec, run_sweep


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


# --- commands --------------------------------------------------------------------


def test_ssc_example(capsys):
    code, out, _ = run(capsys, "ssc", "--g1", "0.6", "--g2", "1.0", "--j", "0", "--delta-c", "0", "--init", "e1g2")
    assert code == 0
    doc = json.loads(out)
    assert doc["ssc"] == pytest.approx(0.64879, abs=1e-5)
    assert doc["ssc"] == pytest.approx(1.2 / 1.8496, abs=1e-12)
    assert doc["source"] == "spectral" and doc["n_surviving"] == 1


def test_trajectory_dark_state(capsys):
    code, out, _ = run(capsys, "trajectory", "--g1", "1", "--g2", "1", "--j", "0", "--init", "minus", "--t-end", "10")
    assert code == 0
    assert out.splitlines()[0] == ",".join(TRAJECTORY_COLUMNS)
    rows = read_csv(out)
    assert len(rows) == 1001
    assert all(abs(float(r["concurrence"]) - 1.0) <= 1e-9 for r in rows)
    assert float(rows[-1]["t"]) == 10.0


def test_trajectory_first_row(capsys):
    code, out, _ = run(capsys, "trajectory", "--g1", "0.3", "--g2", "0.8", "--j", "0.5", "--init", "e1g2", "--t-end", "1")
    assert code == 0
    assert out.splitlines()[1] == "0.000000000000,1,0,0,0,0,0,0"
    assert out.splitlines()[2].startswith("0.010000000000,")


@pytest.mark.parametrize("backend", ["ode", "volterra"])
def test_trajectory_backends_agree(capsys, backend):
    args = ["trajectory", "--g1", "0.7", "--g2", "-0.4", "--j", "1.2", "--delta-c", "0.5",
            "--c1", "0.6", "--c2", "0.8j", "--t-end", "5", "--dt-out", "0.1"]
    _, ref, _ = run(capsys, *args)
    code, out, _ = run(capsys, *args, "--backend", backend)
    assert code == 0
    a, b = read_csv(ref), read_csv(out)
    assert [r["t"] for r in a] == [r["t"] for r in b]
    for col in TRAJECTORY_COLUMNS[1:]:
        diff = max(abs(float(x[col]) - float(y[col])) for x, y in zip(a, b))
        assert diff <= 1e-4


def test_trajectory_degenerate_falls_back(capsys):
    code, out, err = run(capsys, "trajectory", "--g1", "0", "--g2", "0", "--init", "plus", "--t-end", "1")
    assert code == 0 and "ODE backend" in err
    assert all(float(r["concurrence"]) == pytest.approx(1.0) for r in read_csv(out))


def test_gamma_rescales_units(capsys):
    _, a, _ = run(capsys, "ssc", "--g1", "0.4", "--g2", "0.9", "--j", "0.3", "--init", "e1g2")
    _, b, _ = run(capsys, "ssc", "--g1", "0.4", "--g2", "0.9", "--j", "0.3", "--init", "e1g2", "--gamma", "2.5")
    da, db = json.loads(a), json.loads(b)
    assert db["ssc"] == pytest.approx(da["ssc"], abs=1e-10)
    assert db["params"]["g1"] == pytest.approx(1.0)
    _, t1, _ = run(capsys, "trajectory", "--g1", "1", "--g2", "0.5", "--init", "e1g2", "--t-end", "2", "--gamma", "2")
    assert float(read_csv(t1)[-1]["t"]) == 1.0


def test_poles_command(capsys):
    code, out, _ = run(capsys, "poles", "--g1", "1", "--g2", "1", "--init", "e1g2")
    assert code == 0
    doc = json.loads(out)
    im = math.sqrt(7.75) / 2
    poles = [complex(*z) for z in doc["poles"]]
    np.testing.assert_allclose(poles, [0, -0.25 - 1j * im, -0.25 + 1j * im], atol=1e-12)
    assert doc["surviving"] == [0] and doc["degenerate"] is False


def test_sweep_outputs(capsys, tmp_path):
    stem = tmp_path / "grid"
    code, out, _ = run(capsys, "sweep", "--j", "1", "--init", "e1g2", "--grid", "-2:2:21", "--out", str(stem))
    assert code == 0
    summary = json.loads(out)
    assert summary["shape"] == [21, 21]
    text = (tmp_path / "grid.csv").read_text()
    assert text.splitlines()[0] == ",".join(SWEEP_COLUMNS)
    rows = read_csv(text)
    assert len(rows) == 441
    assert [float(rows[k]["g2"]) for k in range(3)] == pytest.approx([-2.0, -1.8, -1.6], abs=1e-15)
    diag = [r for r in rows if r["g1"] == r["g2"] and float(r["g1"]) != 0]
    assert diag and all(float(r["ssc"]) == pytest.approx(0.5, abs=1e-12) for r in diag)
    img = read_ppm(tmp_path / "grid.ppm")
    assert img.shape == (21, 21, 3)


def test_sweep_detunings(capsys, tmp_path):
    stem = tmp_path / "cmp"
    code, out, _ = run(capsys, "sweep", "--j", "1", "--init", "g1e2", "--grid", "-1:1:5",
                       "--detunings", "-3,0,3", "--out", str(stem))
    assert code == 0
    summaries = json.loads(out)
    assert [s["delta_c"] for s in summaries] == [-3.0, 0.0, 3.0]
    for d in ("-3", "0", "3"):
        assert (tmp_path / f"cmp_dc{d}.csv").exists() and (tmp_path / f"cmp_dc{d}.ppm").exists()


def test_scan_zero_row_matches_ssc(capsys, tmp_path):
    stem = tmp_path / "scan"
    code, out, _ = run(capsys, "scan", "--g1", "0.5", "--j", "4", "--init", "g1e2", "--mode", "symmetric",
                       "--eps-grid", "-0.001:0.001:21", "--out", str(stem))
    assert code == 0
    doc = json.loads(out)
    assert doc["mode"] == "SYMMETRIC" and doc["hwhm"] > 0
    rows = read_csv((tmp_path / "scan.csv").read_text())
    zero = [r for r in rows if float(r["eps"]) == 0]
    assert len(zero) == 1
    _, single, _ = run(capsys, "ssc", "--g1", "0.5", "--g2", "0.5", "--j", "4", "--init", "g1e2")
    assert zero[0]["ssc"] == fmt(json.loads(single)["ssc"])


def test_workers_flag_and_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("DARKSTATE_WORKERS", "2")
    assert parse_config(["sweep", "--init", "plus", "--grid", "-1:1:3"]).workers is None
    code, _, _ = run(capsys, "sweep", "--init", "plus", "--grid", "-1:1:5", "--out", str(tmp_path / "a"))
    assert code == 0
    code, _, _ = run(capsys, "sweep", "--init", "plus", "--grid", "-1:1:5", "--out", str(tmp_path / "b"), "--workers", "1")
    assert code == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    monkeypatch.setenv("DARKSTATE_WORKERS", "zero")
    code, _, err = run(capsys, "ssc", "--g1", "1", "--g2", "1", "--init", "plus")
    assert code == 2 and "DARKSTATE_WORKERS" in err


# --- configuration -------------------------------------------------------------------


def test_config_round_trip(tmp_path):
    cfgs = [
        parse_config(["sweep", "--j", "1.5", "--init", "plus_i", "--g1-range", "-2:2:11", "--g2-range", "0:1:3",
                      "--detunings", "0,3", "--workers", "2"]),
        parse_config(["trajectory", "--g1", "0.5", "--g2", "-0.25", "--c1", "0.6", "--c2", "0.8j",
                      "--backend", "volterra", "--h", "0.001", "--gamma", "2"]),
        parse_config(["scan", "--g1", "0.5", "--init", "g1e2", "--mode", "antisymmetric", "--eps-grid", "-0.1:0.1:5"]),
    ]
    for k, cfg in enumerate(cfgs):
        path = tmp_path / f"c{k}.json"
        path.write_text(json.dumps(config_to_dict(cfg)))
        assert parse_config([], path) == cfg
        assert parse_config(["--config", str(path)]) == cfg


def test_flags_override_config(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"command": "ssc", "g1": 0.3, "g2": 0.4, "j": 2.0, "init": "plus"}))
    cfg = parse_config(["ssc", "--config", str(path), "--j", "0.5"])
    assert (cfg.g1, cfg.g2, cfg.j, cfg.init) == (0.3, 0.4, 0.5, "PLUS")


def test_unknown_config_key(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"command": "ssc", "g1": 1, "g2": 1, "init": "plus", "colour": "red"}))
    with pytest.raises(UsageError, match="colour"):
        parse_config([], path)
    code, _, err = run(capsys, "--config", str(path))
    assert code == 2 and "colour" in err


@pytest.mark.parametrize(
    "argv,needle",
    [
        (["ssc", "--g1", "abc", "--g2", "1", "--init", "plus"], "g1"),
        (["ssc", "--g1", "1", "--g2", "1", "--j", "1e", "--init", "plus"], "j"),
        (["sweep", "--init", "plus", "--grid", "-2:2:x"], "g1_range"),
        (["trajectory", "--g1", "1", "--g2", "1", "--init", "plus", "--t-end", "ten"], "t_end"),
    ],
)
def test_malformed_numbers_name_the_field(argv, needle, capsys):
    with pytest.raises(UsageError, match=needle):
        parse_config(argv)
    code, _, err = run(capsys, *argv)
    assert code == 2 and needle in err


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["ssc", "--g1", "1", "--init", "plus"],
        ["ssc", "--g1", "1", "--g2", "1"],
        ["ssc", "--g1", "1", "--g2", "1", "--init", "plus", "--c1", "1", "--c2", "0"],
        ["ssc", "--g1", "1", "--g2", "1", "--c1", "1", "--c2", "1"],
        ["ssc", "--g1", "1", "--g2", "1", "--init", "bell"],
        ["ssc", "--g1", "1", "--g2", "1", "--init", "plus", "--gamma", "0"],
        ["sweep", "--init", "plus", "--grid", "-1:1:3", "--g1-range", "0:1:3"],
        ["sweep", "--init", "plus"],
        ["scan", "--g1", "0.5", "--init", "plus", "--mode", "diagonal", "--eps-grid", "-1:1:3"],
        ["trajectory", "--g1", "1", "--g2", "1", "--init", "plus", "--backend", "rk4"],
        ["ssc", "--g1", "1", "--g2", "1", "--init", "plus", "--out", "/nonexistent/dir/x.json"],
        ["ssc", "--g1", "1", "--g2", "1", "--init", "plus", "--frobnicate"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert "usage error" in err


def test_runtime_failure_exit_1(capsys, tmp_path):
    # Volterra step above the stability limit is a runtime failure, not a usage error
    code, _, err = run(capsys, "trajectory", "--g1", "3", "--g2", "0.5", "--j", "2", "--init", "e1g2",
                       "--backend", "volterra", "--h", "0.01", "--dt-out", "0.01", "--t-end", "0.1")
    assert code == 1 and "error" in err
    # the output path is a directory, so writing fails with the path in the message
    target = tmp_path / "taken"
    target.mkdir()
    code, _, err = run(capsys, "ssc", "--g1", "1", "--g2", "1", "--init", "plus", "--out", str(target))
    assert code == 1 and str(target) in err


def test_negative_leading_values():
    cfg = parse_config(["sweep", "--init", "plus", "--grid", "-2:2:201", "--delta-c", "-3", "--j", "-.5"])
    assert cfg.g1_range == (-2.0, 2.0, 201) and cfg.delta_c == -3.0 and cfg.j == -0.5


def test_explicit_init_not_renormalised():
    cfg = parse_config(["ssc", "--g1", "1", "--g2", "1", "--c1", "0.6", "--c2", "-0.8i"])
    assert cfg.init == (0.6 + 0j, -0.8j)
    assert isinstance(cfg, RunConfig)


# --- heatmaps ----------------------------------------------------------------------------


def test_ramp_endpoints():
    assert ramp(0.0).tolist() == [68, 1, 84]
    assert ramp(1.0).tolist() == [253, 231, 37]
    assert ramp(-1).tolist() == ramp(0).tolist() and ramp(2).tolist() == ramp(1).tolist()


def test_all_zero_sweep_renders_ramp0(tmp_path):
    # decoupled-from-each-other qubits with a symmetric state: zero everywhere off g=0
    res = run_sweep(SweepSpec((0.5, 1.5, 4), (-1.4, -0.1, 3), initial_state_library("E1G2"), j=1.0))
    assert np.all(res.ssc == 0)
    emit_heatmap(res, tmp_path / "z.ppm")
    data = (tmp_path / "z.ppm").read_bytes()
    assert data.startswith(b"P6\n4 3\n255\n")
    img = read_ppm(tmp_path / "z.ppm")
    assert np.all(img == ramp(0.0))


def test_heatmap_orientation(tmp_path):
    # antisymmetric diagonal (top-left to bottom-right in image space) is the brightest band
    res = run_sweep(SweepSpec((-2, 2, 9), (-2, 2, 9), initial_state_library("PLUS")))
    emit_heatmap(res, tmp_path / "h.ppm")
    img = read_ppm(tmp_path / "h.ppm")
    n = 9
    for x in range(n):
        if x == n // 2:
            continue
        y = x  # image row x holds g2 = +2 - 0.5 x, i.e. g2 = -g1 at column x
        assert img[y, x].tolist() == ramp(1.0).tolist()
        assert img[n - 1 - x, x].tolist() == ramp(0.0).tolist()
    # bottom-left pixel is (g1, g2) = (-2, -2)
    cell = steady_concurrence(SystemParams(-2, -2), initial_state_library("PLUS")).ssc
    assert img[n - 1, 0].tolist() == ramp(cell).tolist()


def test_emit_csv_reports_path(tmp_path):
    res = run_sweep(SweepSpec((0, 1, 2), (0, 1, 2), initial_state_library("E1G2")))
    bad = tmp_path / "missing" / "x.csv"
    with pytest.raises(OSError, match=str(bad)):
        emit_csv(res, bad)


def test_fmt_precision():
    assert fmt(-0.0) == "0"
    assert float(fmt(1 / 3)) == 1 / 3
    assert len(fmt(2 / 3).replace("0.", "")) >= 12


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "darkstate", "ssc", "--g1", "1", "--g2", "1", "--init", "e1g2"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["ssc"] == pytest.approx(0.5)
