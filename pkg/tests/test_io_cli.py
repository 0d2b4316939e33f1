import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from dampflow import io as dio
from dampflow.cli import DEFAULTS, main
from dampflow.scalarflow import EigenSignal, TimeGrid


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_signal_csv_round_trip(tmp_path):
    grid = TimeGrid(1.0, 10)
    sig = EigenSignal(grid, np.exp(-grid.times) + 1j * np.sin(grid.times) / 3, -0.7 + 0.1j)
    path = dio.write_signal(tmp_path / "s.csv", sig)
    text = path.read_text()
    assert text.splitlines()[0] == "# delta_weight=-0.69999999999999996,0.10000000000000001"
    assert text.splitlines()[1] == "t,re,im"
    back = dio.read_signal(path)
    assert back.grid == grid
    assert np.abs(back.samples - sig.samples).max() == 0
    assert back.delta_weight == sig.delta_weight


def test_json_is_sorted_and_complex_as_pairs():
    text = dio.dumps({"b": 1 + 2j, "a": np.array([1.0, 2.0])})
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text)["b"] == [1.0, 2.0]


def test_print_config_lists_defaults(capsys, monkeypatch):
    monkeypatch.delenv("DAMPFLOW_OUTPUT_DIR", raising=False)
    code, out, _ = run(capsys, "scan", "--print-config")
    assert code == 0
    cfg = json.loads(out)
    assert set(DEFAULTS) <= set(cfg)
    assert cfg["output_dir"] == "dampflow-out"
    assert cfg["command"] == "scan"


def test_config_file_then_flags(tmp_path, capsys):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"model": "ex1", "n_steps": 100, "t_end": 2.0}))
    code, out, _ = run(capsys, "propagate", "--config", str(conf), "--n-steps", "50", "--print-config")
    cfg = json.loads(out)
    assert code == 0
    assert cfg["model"] == "ex1" and cfg["n_steps"] == 50 and cfg["t_end"] == 2.0


def test_unknown_config_key_is_usage_error(tmp_path, capsys):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"modle": "ex1"}))
    code, _, err = run(capsys, "propagate", "--config", str(conf))
    assert code == 2
    assert json.loads(err)["error"] == "usage"


def test_unknown_model_exit_code(tmp_path, capsys):
    code, _, err = run(capsys, "propagate", "--model", "ex9", "--output-dir", str(tmp_path))
    assert code == 2
    assert json.loads(err)["exit_code"] == 2


def test_bad_flag_exit_code(capsys):
    code, _, _ = run(capsys, "propagate", "--no-such-flag")
    assert code == 2


def test_numerical_error_exit_code(tmp_path, capsys):
    # k = e^{-t} makes a map eigenvalue vanish near t = 1.46: no TCL generator
    code, _, err = run(capsys, "convert", "--model", "ex2", "--decay", "1", "--from", "nz", "--to", "tcl",
                       "--n-steps", "500", "--output-dir", str(tmp_path))
    assert code == 3
    assert json.loads(err)["error"] == "singular_map"


def test_scan_resolution_two_deterministic(tmp_path, capsys):
    outputs = []
    for name in ("a", "b"):
        d = tmp_path / name
        code, _, _ = run(capsys, "scan", "--resolution", "2", "--times", "0,20", "--output-dir", str(d))
        assert code == 0
        outputs.append(((d / "scan_r2.csv").read_bytes(), (d / "scan_r2_summary.json").read_bytes()))
    assert outputs[0] == outputs[1]
    rows = list(csv.DictReader((tmp_path / "a" / "scan_r2.csv").read_text().splitlines()))
    assert list(rows[0]) == ["x1", "x2", "x3", "t", "exact_cp", "red_cp", "exact_p", "red_p"]
    assert len({(r["x1"], r["x2"], r["x3"]) for r in rows}) == 6
    t0 = [r for r in rows if float(r["t"]) == 0.0]
    assert all(r["exact_cp"] == "1" and r["red_cp"] == "1" for r in t0)


def test_env_output_dir(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("DAMPFLOW_OUTPUT_DIR", str(tmp_path / "envdir"))
    code, _, _ = run(capsys, "scan", "--resolution", "2", "--times", "0")
    assert code == 0
    assert (tmp_path / "envdir" / "scan_r2.csv").exists()


def test_convert_ex4_tcl_to_red(tmp_path, capsys):
    code, out, _ = run(capsys, "convert", "--model", "ex4", "--x", "0.5,0.5,0", "--from", "tcl", "--to", "red",
                       "--n-steps", "5000", "--output-dir", str(tmp_path))
    assert code == 0
    report = json.loads(out)
    assert report["dt_vs_half_dt_discrepancy"] < 1e-5
    x = np.array([0.5, 0.5, 0.0])
    for k in range(3):
        sig = dio.read_signal(tmp_path / f"random_dephasing_red_ch{k + 1}.csv")
        expected = 2 * (x[k] - 1) * np.exp(-2 * x[k] * sig.t)
        assert np.abs(sig.samples - expected).max() < 1e-6


def test_convert_ex3_tcl_to_nz(tmp_path, capsys):
    code, out, _ = run(capsys, "convert", "--model", "ex3", "--from", "tcl", "--to", "nz",
                       "--output-dir", str(tmp_path))
    assert code == 0
    for a in range(4):
        tcl = dio.read_signal(tmp_path / f"pure_dephasing_tcl_ch{a}.csv")
        nz = dio.read_signal(tmp_path / f"pure_dephasing_nz_ch{a}.csv")
        assert abs(nz.delta_weight - tcl.samples[0]) < 1e-12


def test_convert_delta_kernel_to_constant_tcl(tmp_path, capsys):
    code, _, _ = run(capsys, "convert", "--model", "ex2", "--profile", "constant", "--from", "nz", "--to", "red",
                     "--n-steps", "200", "--t-end", "1", "--output-dir", str(tmp_path))
    assert code == 0
    # a pure delta kernel: the ex3 phi = e^{-t} NZ form round-trips to a constant TCL rate
    code, _, _ = run(capsys, "convert", "--model", "ex3", "--from", "nz", "--to", "tcl",
                     "--output-dir", str(tmp_path / "delta"))
    assert code == 0
    tcl = dio.read_signal(tmp_path / "delta" / "pure_dephasing_tcl_ch1.csv")
    assert np.abs(tcl.samples + 1).max() < 1e-6


@pytest.mark.parametrize("command", ["propagate", "lindblad", "divisibility"])
def test_other_commands_run(tmp_path, capsys, command):
    code, out, _ = run(capsys, command, "--model", "ex1", "--n-steps", "400", "--output-dir", str(tmp_path))
    assert code == 0
    report = json.loads(out)
    for f in report["files"]:
        assert (tmp_path / f).exists()


def test_divisibility_eternal_point(tmp_path, capsys):
    code, out, _ = run(capsys, "divisibility", "--model", "ex4", "--x", "0.5,0.5,0", "--output-dir", str(tmp_path))
    report = json.loads(out)
    assert code == 0
    assert report["cp_divisible_until"] == 0.0
    assert report["p_divisible"] is True


def test_validate_default_passes(tmp_path, capsys):
    code, out, _ = run(capsys, "validate", "--output-dir", str(tmp_path))
    report = json.loads(out)
    assert code == 0, report["failed_checks"]
    assert report["passed"]


def test_validate_tiny_tolerance_fails_cleanly(tmp_path, capsys):
    code, out, _ = run(capsys, "validate", "--tolerance", "1e-30", "--n-steps", "400", "--output-dir", str(tmp_path))
    report = json.loads(out)
    assert code == 1
    assert report["failed_checks"]
    assert (tmp_path / "validate_report.json").exists()


def test_validate_halved_dt_convergence(tmp_path, capsys):
    code, out, _ = run(capsys, "validate", "--halve-dt", "--output-dir", str(tmp_path))
    report = json.loads(out)
    assert code == 0, report["failed_checks"]
    measured = [c for c in report["convergence"] if c.get("status") != "skipped"]
    assert measured
    assert all(c["ratio"] >= 3.0 for c in measured)


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "dampflow", "scan", "--resolution", "2", "--times", "0",
                           "--output-dir", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["points"] == 6
