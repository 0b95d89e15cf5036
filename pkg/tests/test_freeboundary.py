from __future__ import annotations

import math

import numpy as np
import pytest

from penalized_fb.freeboundary import (
    BlowupSpec,
    FlatnessConfig,
    analyze,
    blowup_rescale,
    blowup_sequence,
    density_ratios,
    estimate_lambda,
    extract_free_boundary,
    fit_halfplane,
    flatness_decay_check,
    gradient_bound_fit,
    halfplane_slope_profile,
    linear_growth_check,
    nondegeneracy_samples,
)
from penalized_fb.grid import ScalarField, build_halfdisk, build_rectangle

LAM = 2.0


def halfplane(n: int = 65, row: int | None = None, lam: float = LAM):
    """``lam * (c - y)^+`` on the unit square with ``c`` on lattice row ``row``."""
    d = build_rectangle(n, n, 1.0 / (n - 1))
    row = n // 2 + 1 if row is None else row
    c = row * d.h
    return ScalarField.from_function(d, lambda X, Y: lam * np.maximum(c - Y, 0.0)), row


def test_1d_ramp_single_node():
    d = build_rectangle(257, 1, 1 / 256)
    u = ScalarField.from_function(d, lambda X, Y: np.maximum(1 - 2 * X, 0.0))
    rep = extract_free_boundary(u)
    assert len(rep.fb_nodes) == 1
    assert abs(rep.positions[0, 0] - 0.5) <= d.h
    assert rep.perimeter == 1.0
    assert rep.normals[0] == pytest.approx([1.0, 0.0])


def test_halfplane_row_and_normals():
    u, row = halfplane()
    rep = extract_free_boundary(u)
    assert set(rep.fb_nodes[:, 1]) == {row - 1}
    assert np.max(np.abs(rep.normals - np.array([0.0, 1.0]))) < 1e-6
    d = u.domain
    assert rep.perimeter == pytest.approx((d.nx - 2) * d.h)


@pytest.mark.parametrize("n, factor", [(33, 1.25), (129, math.sqrt(2))])
def test_quarter_disk_perimeter(n, factor):
    # a staircase tends to 4/pi times a quarter arc, so 25% only holds on coarse lattices
    d = build_rectangle(n, n, 1 / (n - 1))
    u = ScalarField.from_function(d, lambda X, Y: np.maximum(0.3 - np.hypot(X, Y), 0.0))
    rep = extract_free_boundary(u)
    smooth = math.pi / 2 * 0.3
    assert smooth <= rep.perimeter <= factor * smooth


def test_degenerate_fields_have_no_free_boundary():
    d = build_rectangle(9, 9, 0.125)
    for data in (np.ones(d.shape), np.zeros(d.shape)):
        rep = extract_free_boundary(ScalarField(data, d))
        assert rep.empty
        with pytest.raises(ValueError):
            estimate_lambda(ScalarField(data, d))
    assert analyze(ScalarField(np.ones(d.shape), d)).empty


def test_lambda_exact_profile():
    u, _ = halfplane()
    rep = estimate_lambda(u)
    h = u.domain.h
    assert abs(rep.lambda_mean - LAM) <= 2 * h
    assert rep.lambda_std <= h


def test_lambda_1d_solve(interval_eps01):
    _, sol = interval_eps01
    rep = estimate_lambda(sol)
    assert rep.lambda_mean == pytest.approx(2.0, abs=0.05)


def test_density_flat():
    u, _ = halfplane()
    h = u.domain.h
    radii = [4 * h, 8 * h, 12 * h]
    rep = density_ratios(u, radii)
    assert rep.density_table
    for row in rep.density_table:
        assert abs(row.ratio - 0.5) <= 2 * h / row.r


def test_density_convex_corner():
    d = build_rectangle(65, 65, 1 / 64)
    c = 0.5
    u = ScalarField.from_function(d, lambda X, Y: np.maximum(c - X, 0.0) * np.maximum(c - Y, 0.0))
    rep = extract_free_boundary(u)
    k = int(np.argmin(np.hypot(rep.positions[:, 0] - c, rep.positions[:, 1] - c)))
    rep.fb_nodes = rep.fb_nodes[k : k + 1]
    rep.positions = rep.positions[k : k + 1]
    density_ratios(u, [4 * d.h], rep)
    ratio = rep.density_table[0].ratio
    assert 0.2 <= ratio <= 0.4


def test_density_skips_small_and_boundary_radii():
    u, _ = halfplane(n=33)
    h = u.domain.h
    rep = density_ratios(u, [2 * h, 0.9])
    assert not rep.density_table
    reasons = {s[3] for s in rep.skipped}
    assert reasons == {"radius below 4h", "ball reaches the fixed boundary"}


def test_growth_exact_profile():
    u, _ = halfplane()
    c_low, C_high = linear_growth_check(u)
    assert c_low == pytest.approx(LAM, abs=1e-9)
    assert C_high == pytest.approx(LAM, abs=1e-9)


def test_growth_1d_solve(interval_eps01):
    _, sol = interval_eps01
    h = sol.domain.h
    c_low, C_high = linear_growth_check(sol, band=3)
    assert abs(c_low - 2) <= 0.05 and abs(C_high - 2) <= 0.05
    _, C_all = linear_growth_check(sol)
    assert 0 < C_all <= 2 + 10 * h


def test_gradient_fit_exact_cone():
    u, _ = halfplane()
    h = u.domain.h
    fit = gradient_bound_fit(u, [2 * h, 4 * h, 8 * h], lam=LAM)
    assert fit.degenerate and fit.C == 0.0
    assert np.allclose(fit.m, LAM)
    with pytest.raises(ValueError):
        gradient_bound_fit(u, [2 * h, 4 * h])


def test_gradient_fit_1d(interval_eps01):
    _, sol = interval_eps01
    h = sol.domain.h
    fit = gradient_bound_fit(sol, [2 * h, 4 * h, 8 * h])
    assert fit.C < 1e-6


def test_blowup_homogeneous_profile():
    u, row = halfplane(n=129)
    d = u.domain
    center = (0.5, row * d.h)
    for rho in (0.2, 0.1, 0.05):
        v = blowup_rescale(u, BlowupSpec(center, rho, 41))
        VX, VY = v.domain.coords
        assert np.max(np.abs(v.data - LAM * np.maximum(-VY, 0.0))) < 1e-9
        fit = fit_halfplane(v)
        assert fit.lam == pytest.approx(LAM, rel=1e-6)
        assert fit.normal[1] == pytest.approx(1.0, abs=1e-6)
        assert fit.sup_distance < 1e-6


def test_blowup_guards():
    u, row = halfplane(n=33)
    h = u.domain.h
    with pytest.raises(ValueError):
        blowup_rescale(u, BlowupSpec((0.5, 0.5), 2 * h))
    with pytest.raises(ValueError):
        blowup_rescale(u, BlowupSpec((0.05, 0.5), 0.2))
    with pytest.raises(ValueError):
        BlowupSpec((0.5, 0.5), 0.0)


def test_blowup_sequence_order():
    u, row = halfplane(n=129)
    seq = blowup_sequence(u, (0.5, row * u.domain.h), [0.2, 0.1])
    assert [r for r, _ in seq] == [0.2, 0.1]


def test_slope_profile_trivial_cases():
    d = build_halfdisk(1.0, 1 / 32)
    lin = ScalarField.from_function(d, lambda X, Y: 3 * np.maximum(Y, 0.0))
    prof = halfplane_slope_profile(lin)
    assert prof.alpha_est == pytest.approx(3.0)
    assert np.max(prof.residuals) < 1e-12
    assert halfplane_slope_profile(ScalarField.zeros(d)).alpha_est == 0.0


def test_flatness_control_and_monotone():
    h = 1 / 32
    one = flatness_decay_check(FlatnessConfig(delta0=1.0, h=h))
    third = flatness_decay_check(FlatnessConfig(delta0=1 / 3, h=h))
    zero = flatness_decay_check(FlatnessConfig(delta0=0.0, h=h))
    assert abs(one.gamma - 1.0) <= 3 * h
    assert third.gamma < 1.0 and third.decayed
    assert zero.gamma < third.gamma
    with pytest.raises(ValueError):
        FlatnessConfig(delta0=1.5)


def test_nondegeneracy_constants_positive():
    u, _ = halfplane(n=33)
    h = u.domain.h
    samples = nondegeneracy_samples(u, [4 * h, 6 * h], n_centers=4, p=2.0)
    assert samples
    assert all(s.C > 0 and s.zero_measure > 0 for s in samples)


def test_analyze_fills_report(interval_eps01):
    _, sol = interval_eps01
    rep = analyze(sol)
    assert rep.lambda_mean == pytest.approx(2.0, abs=0.05)
    assert rep.summary_csv().splitlines()[0] == rep.SUMMARY_HEADER
    assert rep.fb_csv(sol.domain).splitlines()[0] == "node,x,y,flux,nx,ny"
