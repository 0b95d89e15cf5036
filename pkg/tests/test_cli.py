from __future__ import annotations

import csv
import io

import pytest

from penalized_fb.cli import main

CFG = "problem = interval_1d\nepsilon_list = 0.36, 0.1\ngeometry.n = 128\n"


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(CFG)
    return p


def test_sweep_command(cfg_path, tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["sweep", "--config", str(cfg_path), "--out", str(out), "--seed", "3"]) == 0
    text = capsys.readouterr().out
    assert text.startswith("epsilon,positivity,vol_gap")
    assert (out / "sweep.csv").read_text() == text
    assert (out / "eps_0.36" / "field.txt").exists()


def test_solve_command(cfg_path, tmp_path, capsys):
    out = tmp_path / "s"
    assert main(["solve", "--config", str(cfg_path), "--out", str(out), "--epsilon", "0.1", "--set", "solver.toggle_passes=3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("dirichlet,penalty,total,positivity")
    assert (out / "eps_0.1" / "summary.csv").exists()


def test_oracle_commands(capsys):
    assert main(["oracle1d", "--epsilon", "0.1"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert float(rows[0]["s_star"]) == 0.5 and rows[0]["branch"] == "at_kink"
    assert main(["oracle1d", "--epsilon", "0.36", "--scan", "--samples", "11"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 12
    assert main(["annulus-oracle", "--epsilon", "0.05"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert float(rows[0]["R_star"]) == pytest.approx(1.204, abs=1e-3)


def test_verify_empty_list_succeeds(tmp_path, capsys):
    assert main(["verify", "--checks", "", "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out.strip() == "check,status,measured,threshold,detail"
    assert (tmp_path / "verify.csv").exists()


def test_verify_fast_checks(capsys):
    assert main(["verify", "--checks", "volume_attainment,overshoot"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [r["status"] for r in rows] == ["pass", "pass"]


def test_verify_unknown_check_fails(capsys):
    assert main(["verify", "--checks", "nope"]) == 1
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert rows[0]["status"] == "error"


def test_config_errors_exit_2(cfg_path, capsys):
    assert main(["sweep", "--config", str(cfg_path), "--set", "alpha=5"]) == 2
    assert "alpha" in capsys.readouterr().err
    assert main(["sweep", "--config", str(cfg_path) + ".missing"]) == 2
