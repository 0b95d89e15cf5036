from __future__ import annotations

import math

import numpy as np
import pytest

from penalized_fb.energy import PenaltyParams
from penalized_fb.oracles import (
    annulus_energy,
    kink_bracket,
    oracle_1d_minimizer,
    oracle_1d_scan,
    oracle_annulus_minimizer,
    radial_p_harmonic,
    ramp_energy,
    shell_volume,
    sphere_area,
)


def test_1d_at_kink():
    r = oracle_1d_minimizer(1.0, 2.0, 0.1, 0.5)
    assert r.s_star == 0.5
    assert r.lambda_star == 2.0
    assert r.energy == pytest.approx(2.0)
    assert r.branch == "at_kink"


def test_1d_overshoot_branch():
    r = oracle_1d_minimizer(1.0, 2.0, 0.36, 0.5)
    assert r.s_star == pytest.approx(0.6, abs=1e-6)
    assert r.branch == "above_alpha"
    assert isinstance(r.s_star, float)


def test_1d_small_eps_attains():
    for eps in (0.25, 0.1, 0.01, 1e-4):
        assert oracle_1d_minimizer(1.0, 2.0, eps, 0.5).s_star == 0.5


def test_1d_undershoot_branch():
    # small b: the slope cost K at alpha is below the reward epsilon
    b, p, alpha = 0.1, 2.0, 0.5
    K = (p - 1) * (b / alpha) ** p
    eps = 2.25 * K
    r = oracle_1d_minimizer(b, p, eps, alpha)
    assert r.branch == "below_alpha"
    assert r.s_star == pytest.approx(b * math.sqrt((p - 1) / eps), rel=1e-5)


def test_kink_bracket_matches_bruteforce():
    for b, p, alpha in ((1.0, 2.0, 0.5), (1.0, 3.0, 0.5), (0.5, 1.5, 0.4)):
        k = kink_bracket(b, p, alpha)
        for eps in np.geomspace(1e-3, 50, 40):
            at = oracle_1d_minimizer(b, p, eps, alpha).s_star == alpha
            # ignore points too close to the transition for the scan to resolve
            if abs(math.log(eps / k)) > 0.02:
                assert at == (eps <= k), (b, p, alpha, eps)


def test_scan_returns_curve():
    s, E = oracle_1d_scan(1.0, 2.0, 0.1, 0.5, 101)
    assert s.shape == E.shape == (101,)
    assert E[np.argmin(E)] == pytest.approx(ramp_energy(s[np.argmin(E)], 1.0, 2.0, PenaltyParams(0.1, 0.5)))


def test_oracle_input_validation():
    with pytest.raises(ValueError):
        oracle_1d_minimizer(0.0, 2.0, 0.1, 0.5)
    with pytest.raises(ValueError):
        oracle_1d_minimizer(1.0, 2.0, 0.1, 1.5)


def test_radial_log_profile():
    prof = radial_p_harmonic(1.0, 2.0, 1.0, 0.0, 2.0, 2)
    assert prof(math.sqrt(2)) == pytest.approx(0.5)
    r = np.linspace(1, 2, 7)
    assert np.allclose(prof(r), np.log(2 / r) / math.log(2))


def test_radial_power_profile_p3():
    prof = radial_p_harmonic(1.0, 2.0, 1.0, 0.0, 3.0, 2)
    assert prof.exponent == pytest.approx(0.5)
    r = np.linspace(1, 2, 7)
    assert np.allclose(prof(r), (math.sqrt(2) - np.sqrt(r)) / (math.sqrt(2) - 1))


def test_radial_constant_profile():
    prof = radial_p_harmonic(1.0, 3.0, 0.7, 0.7, 2.5, 3)
    assert np.allclose(prof(np.linspace(1, 3, 5)), 0.7)
    assert prof.dirichlet_energy() == 0.0


def test_radial_energy_matches_quadrature():
    prof = radial_p_harmonic(1.0, 2.0, 1.0, 0.0, 3.0, 2)
    r = np.linspace(1, 2, 20001)
    integrand = np.abs(prof.derivative(r)) ** 3 * 2 * np.pi * r
    assert prof.dirichlet_energy() == pytest.approx(np.trapezoid(integrand, r), rel=1e-6)


def test_sphere_and_shell():
    assert sphere_area(1) == 2.0
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    assert shell_volume(1.0, 2.0, 2) == pytest.approx(3 * math.pi)


def test_annulus_p2_eps005():
    res = oracle_annulus_minimizer(1.0, 1.0, 2.0, 2, 0.05)
    R = np.linspace(1.0005, 2, 200001)
    brute = R[np.argmin(2 * np.pi / np.log(R) + np.pi / 0.05 * (R**2 - 1))]
    assert res.R_star == pytest.approx(brute, abs=1e-4)
    assert res.R_star == pytest.approx(1.2, abs=0.01)


def test_annulus_energy_formula():
    e = annulus_energy(1.3, 1.0, 1.0, 2.0, 2, 0.1)[0]
    assert e == pytest.approx(2 * math.pi / math.log(1.3) + math.pi * (1.3**2 - 1) / 0.1)


def test_annulus_limits():
    big = oracle_annulus_minimizer(1.0, 1.0, 2.0, 2, 1e6)
    assert big.R_star == pytest.approx(2.0, abs=1e-3)
    small = oracle_annulus_minimizer(1.0, 1.0, 2.0, 2, 1e-3)
    assert 1.0 < small.R_star < 1.05


def test_annulus_monotone_in_eps():
    eps = np.geomspace(1e-3, 10, 15)
    R = [oracle_annulus_minimizer(1.0, 1.0, 3.0, 2, e, 800).R_star for e in eps]
    assert all(b >= a - 1e-9 for a, b in zip(R, R[1:]))
