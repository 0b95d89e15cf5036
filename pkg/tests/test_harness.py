from __future__ import annotations

import math

import numpy as np
import pytest

from penalized_fb.config import parse_config_text
from penalized_fb.energy import EnergyBreakdown, total_energy
from penalized_fb.harness import SWEEP_HEADER, default_vol_tol, load_field, run_epsilon_sweep
from penalized_fb.oracles import oracle_1d_minimizer, oracle_annulus_minimizer, shell_volume

EPS = "0.5, 0.36, 0.25, 0.1, 0.01"


def _cfg(tmp_path, extra: str = "", eps: str = EPS):
    return parse_config_text(f"problem = interval_1d\nepsilon_list = {eps}\ngeometry.n = 256\noutput_dir = {tmp_path}\n{extra}")


@pytest.fixture(scope="module")
def sweep_1d(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    return out, run_epsilon_sweep(_cfg(out))


def test_sweep_attains_at_quarter(sweep_1d):
    _, rep = sweep_1d
    assert rep.epsilon_attained == 0.25
    h = 1 / 255
    for row in rep.rows:
        s_star = oracle_1d_minimizer(1.0, 2.0, row.epsilon, 0.5).s_star
        assert abs(row.positivity - s_star) <= 2 * h
    assert [r.epsilon for r in rep.rows] == [0.5, 0.36, 0.25, 0.1, 0.01]


def test_sweep_csv_and_artifacts(sweep_1d):
    out, rep = sweep_1d
    text = (out / "sweep.csv").read_text()
    assert text.splitlines()[0] == SWEEP_HEADER == "epsilon,positivity,vol_gap,lambda_mean,lambda_std,energy,iters,converged"
    assert len(text.splitlines()) == 6
    for name in ("field.txt", "mask.txt", "trace.csv", "energy.csv", "fb.csv", "density.csv", "summary.csv"):
        assert (out / "eps_0.1" / name).exists()


def test_persisted_field_roundtrip(sweep_1d, tmp_path):
    out, rep = sweep_1d
    cfg = _cfg(tmp_path)
    for eps in (0.36, 0.1):
        prob = cfg.build(eps)
        u = load_field(out / f"eps_{eps:g}" / "field.txt", prob)
        stored = EnergyBreakdown.from_csv_row((out / f"eps_{eps:g}" / "energy.csv").read_text().splitlines()[1])
        again = total_energy(u, 2.0, rep.solutions[eps].params)
        assert again.total == pytest.approx(stored.total, rel=4 * np.finfo(float).eps, abs=0)


def test_load_field_rejects_other_lattice(sweep_1d, tmp_path):
    out, _ = sweep_1d
    other = parse_config_text("problem = interval_1d\nepsilon_list = 0.1\ngeometry.n = 64\n").build()
    with pytest.raises(ValueError):
        load_field(out / "eps_0.1" / "field.txt", other)


def test_sweep_is_byte_identical(sweep_1d, tmp_path):
    _, rep = sweep_1d
    again = run_epsilon_sweep(_cfg(tmp_path))
    assert again.csv() == rep.csv()


def test_attained_stable_when_appending_larger_eps(sweep_1d, tmp_path):
    _, rep = sweep_1d
    more = run_epsilon_sweep(_cfg(tmp_path, eps=EPS + ", 0.8, 2.0"), persist=False)
    assert more.epsilon_attained == rep.epsilon_attained


def test_parallel_matches_serial(sweep_1d, tmp_path):
    _, rep = sweep_1d
    par = run_epsilon_sweep(_cfg(tmp_path), persist=False, workers=2)
    assert par.csv() == rep.csv()


def test_warm_start_keeps_attainment(sweep_1d, tmp_path):
    _, rep = sweep_1d
    warm = run_epsilon_sweep(_cfg(tmp_path, "warm_start = true\n"), persist=False)
    assert warm.epsilon_attained == rep.epsilon_attained


def test_nonconverged_rows_are_flagged(tmp_path):
    rep = run_epsilon_sweep(_cfg(tmp_path, "solver.max_outer = 1\n", eps="0.1, 0.01"), persist=False)
    assert len(rep.rows) == 2
    assert not any(r.converged for r in rep.rows)
    assert rep.csv().splitlines()[1].endswith(",false")


def test_default_vol_tol(sweep_1d):
    _, rep = sweep_1d
    h = 1 / 255
    assert rep.vol_tols[-1] == pytest.approx(2 * h)
    assert default_vol_tol(rep.reports[0.1], h, 1) == pytest.approx(2 * h)


@pytest.mark.slow
def test_strip_sweep_matches_1d_pattern(sweep_1d, tmp_path):
    _, rep1 = sweep_1d
    cfg = parse_config_text(f"problem = strip_2d\nepsilon_list = {EPS}\noutput_dir = {tmp_path}\n")
    rep = run_epsilon_sweep(cfg, persist=False)
    assert rep.epsilon_attained == rep1.epsilon_attained
    d = rep.solutions[0.1].domain
    height = (d.ny - 2) * d.h
    for row in rep.rows:
        s_star = oracle_1d_minimizer(1.0, 2.0, row.epsilon, 0.5).s_star
        assert abs(row.positivity / height - s_star) <= 2 * d.h


@pytest.mark.slow
def test_annulus_sweep_matches_shell_volumes(tmp_path):
    h = 1 / 16
    cfg = parse_config_text(f"problem = annulus_2d\nepsilon_list = 0.2, 0.05\ngeometry.h = {h}\noutput_dir = {tmp_path}\n")
    rep = run_epsilon_sweep(cfg, persist=False)
    pos = [r.positivity for r in rep.rows]
    # larger epsilon lets the support spread further
    assert pos[0] >= pos[1]
    for row in rep.rows:
        R = oracle_annulus_minimizer(1.0, 1.0, 2.0, 2, row.epsilon).R_star
        band = 2 * math.pi * R * 3 * h
        assert abs(row.positivity - shell_volume(1.0, R, 2)) <= band
