import csv
import json
import os
import subprocess
import sys

import pytest

from eit_localizer import harness
from eit_localizer.cli import main
from eit_localizer.config import build_config

FAST_READOUT = ("coupling.omega_max = 18gamma\n[grid]\nx_max = 20nm\npoints = 5\n"
                "adaptive = false\n")


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_dark_state_outputs(tmp_path, capsys):
    assert main(["dark-state", "--out", str(tmp_path), "--jobs", "1"]) == 0
    rows = _read_csv(tmp_path / "dark-state.csv")
    assert rows[0][:2] == ["omega_p_over_gamma", "omega_c_over_gamma"]
    manifest = json.loads((tmp_path / "dark-state.json").read_text())
    for key in ("config_hash", "config", "code_version", "jobs", "wall_time_s", "results"):
        assert key in manifest
    assert json.loads(capsys.readouterr().out) == manifest["results"]


def test_readout_scan_headers_and_determinism(tmp_path, monkeypatch):
    cfg = tmp_path / "fast.cfg"
    cfg.write_text(FAST_READOUT)
    monkeypatch.delenv(harness.THREADS_ENV, raising=False)
    assert main(["readout-scan", "--config", str(cfg), "--out", str(tmp_path / "a"),
                 "--jobs", "1"]) == 0
    monkeypatch.setenv(harness.THREADS_ENV, "2")
    assert main(["readout-scan", "--config", str(cfg), "--out", str(tmp_path / "b"),
                 "--jobs", "1"]) == 0
    a = (tmp_path / "a" / "readout-scan.csv").read_bytes()
    assert a == (tmp_path / "b" / "readout-scan.csv").read_bytes()
    header = _read_csv(tmp_path / "a" / "readout-scan.csv")[0]
    assert header[0] == "x_nm" and "photons" in header and "detected" in header
    mb = json.loads((tmp_path / "b" / "readout-scan.json").read_text())
    assert mb["jobs"] == 2
    assert mb["results"]["measurement_time_us"] == pytest.approx(96.0)


def test_env_overrides_jobs(monkeypatch):
    monkeypatch.setenv(harness.THREADS_ENV, "3")
    assert harness.resolve_jobs(1) == 3
    monkeypatch.setenv(harness.THREADS_ENV, "many")
    with pytest.raises(ValueError):
        harness.resolve_jobs(1)
    monkeypatch.delenv(harness.THREADS_ENV)
    assert harness.resolve_jobs(2) == 2
    with pytest.raises(ValueError):
        harness.resolve_jobs(0)


def test_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("trap.depth = -1mK\n")
    assert main(["convolve", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "config"
    assert "trap.depth" in err["message"]


def test_invalid_jobs_exit_code(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv(harness.THREADS_ENV, raising=False)
    assert main(["dark-state", "--jobs", "0", "--out", str(tmp_path)]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "invalid-input"


def test_unknown_subcommand():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_dipole_check(tmp_path):
    assert main(["dipole-check", "--out", str(tmp_path), "--jobs", "1"]) == 0
    manifest = json.loads((tmp_path / "dipole-check.json").read_text())
    hz = manifest["results"]["rabi_perturbation_hz"]
    assert hz == pytest.approx(159e3, rel=0.10)
    header = _read_csv(tmp_path / "dipole-check.csv")[0]
    assert "rabi_perturbation_hz" in header and "distance_nm" in header


def test_validate_subcommand(tmp_path):
    code, summary = harness.run("validate", build_config(), tmp_path, jobs=1)
    assert code == 0 and summary["passed"]
    rows = _read_csv(tmp_path / "validate.csv")
    assert rows[0] == ["check", "value", "limit", "passed"]


def test_console_script(tmp_path):
    env = dict(os.environ, **{harness.THREADS_ENV: "1"})
    out = subprocess.run([sys.executable, "-m", "eit_localizer.cli", "dark-state", "--out",
                          str(tmp_path)], capture_output=True, text=True, env=env, check=True)
    assert json.loads(out.stdout)
    assert json.loads((tmp_path / "dark-state.json").read_text())["jobs"] == 1
