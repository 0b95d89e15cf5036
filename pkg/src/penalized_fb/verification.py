"""Property and oracle checks on canonical problems, one function per check.

Each check returns a :class:`CheckResult`; ``run_verification_suite`` runs a
selection, records internal errors as ``error`` and keeps going.  Solves are
shared between checks through a per-suite cache.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

import numpy as np

from .config import ALL_CHECKS
from .energy import PenaltyParams, cell_gradient_sq, dirichlet_p_energy, penalty
from .freeboundary import (
    FlatnessConfig,
    analyze,
    blowup_rescale,
    BlowupSpec,
    fit_halfplane,
    flatness_decay_check,
    halfplane_slope_profile,
    linear_growth_check,
)
from .grid import ScalarField, build_rectangle
from .harness import default_vol_tol
from .oracles import kink_bracket, oracle_1d_minimizer, oracle_annulus_minimizer
from .problems import Problem, build_problem
from .solver import SolverConfig, Solution, harmonic_replacement, solve_penalized

__all__ = ["CheckResult", "VerificationContext", "CHECKS", "run_verification_suite", "results_csv", "CHECK_HEADER"]

logger = logging.getLogger(__name__)

CHECK_HEADER = "check,status,measured,threshold,detail"

SWEEP_EPSILONS = (0.5, 0.36, 0.25, 0.1, 0.01)
INTERVAL = ("interval_1d", (("n", 256),))
STRIP = ("strip_2d", ())
ANNULUS = ("annulus_2d", (("h", 1.0 / 32),))
ANNULUS_EPS = 0.05
DENSITY_CELLS = (4, 8, 12, 16)


@dataclass(frozen=True)
class CheckResult:
    check: str
    status: str
    measured: str
    threshold: str
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def _result(name: str, ok: bool, measured, threshold, detail: str = "") -> CheckResult:
    return CheckResult(name, "pass" if ok else "fail", str(measured), str(threshold), detail)


def _g(x: float) -> str:
    return f"{x:.6g}"


@dataclass
class VerificationContext:
    """Solver settings shared by the checks and a cache of completed solves."""

    solver: Mapping[str, object] = field(default_factory=dict)
    seed: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    def config(self, p: float) -> SolverConfig:
        return SolverConfig(p=p, seed=self.seed, **dict(self.solver))

    def problem(self, key, p: float | None = None, eps: float | None = None) -> Problem:
        name, kwargs = key
        return build_problem(name, epsilon=eps, p=p, **dict(kwargs))

    def solve(self, key, p: float, eps: float) -> tuple[Problem, Solution, float]:
        ck = (key, float(p), float(eps))
        if ck not in self._cache:
            prob = self.problem(key, p, eps)
            t0 = time.perf_counter()
            sol = solve_penalized(prob.domain, prob.bdata, p, PenaltyParams(eps, prob.alpha), self.config(p))
            self._cache[ck] = (prob, sol, time.perf_counter() - t0)
        return self._cache[ck]

    def solutions(self) -> list[tuple[tuple, Solution]]:
        return [(k, v[1]) for k, v in self._cache.items() if isinstance(v, tuple) and len(v) == 3 and isinstance(v[1], Solution)]

    def two_dim_solutions(self) -> list[tuple[str, Solution]]:
        out = []
        for eps in SWEEP_EPSILONS:
            out.append((f"strip eps={eps:g}", self.solve(STRIP, 2.0, eps)[1]))
        for p in (2.0, 3.0):
            out.append((f"annulus p={p:g}", self.solve(ANNULUS, p, ANNULUS_EPS)[1]))
        return out


# ---------------------------------------------------------------------------


def check_volume_attainment(ctx: VerificationContext) -> CheckResult:
    worst_oracle, worst_alpha, total = 0.0, 0.0, 0.0
    parts = []
    h = None
    for eps in SWEEP_EPSILONS:
        prob, sol, dt = ctx.solve(INTERVAL, 2.0, eps)
        h = prob.domain.h
        total += dt
        s = sol.breakdown.positivity
        orc = oracle_1d_minimizer(1.0, 2.0, eps, prob.alpha)
        worst_oracle = max(worst_oracle, abs(s - orc.s_star))
        if eps <= kink_bracket(1.0, 2.0, prob.alpha):
            worst_alpha = max(worst_alpha, abs(s - prob.alpha))
        parts.append(f"eps={eps:g}:s={_g(s)}/oracle={_g(orc.s_star)}")
    ok = worst_oracle <= 2 * h and worst_alpha <= 2 * h and total < 10.0
    return _result(
        "volume_attainment",
        ok,
        f"max|s-s*|={_g(worst_oracle)} max|s-alpha|={_g(worst_alpha)} time={total:.2f}s",
        f"2h={_g(2 * h)} time<10s",
        " ".join(parts),
    )


def check_overshoot(ctx: VerificationContext) -> CheckResult:
    prob, sol, _ = ctx.solve(INTERVAL, 2.0, 0.36)
    h = prob.domain.h
    s = sol.breakdown.positivity
    err = abs(s - 0.6)
    return _result("overshoot", err <= 2 * h and s > prob.alpha + 2 * h, f"s={_g(s)} |s-0.6|={_g(err)}", f"2h={_g(2 * h)}")


def _annulus_errors(prob: Problem, sol: Solution, p: float):
    orc = oracle_annulus_minimizer(1.0, 1.0, p, 2, ANNULUS_EPS)
    d = prob.domain
    X, Y = d.coords
    R = np.hypot(X, Y)
    ref = np.where(R <= orc.R_star, orc.profile.extended(R), 0.0)
    sup = float(np.max(np.abs(sol.field.data - ref)[d.closure_mask]))
    R_num = math.sqrt(1.0 + sol.breakdown.positivity / math.pi)
    return orc, sup, R_num


def check_radial_oracle(ctx: VerificationContext) -> CheckResult:
    ok = True
    parts = []
    h = None
    for p in (2.0, 3.0):
        prob, sol, dt = ctx.solve(ANNULUS, p, ANNULUS_EPS)
        h = prob.domain.h
        orc, sup, R_num = _annulus_errors(prob, sol, p)
        rerr = abs(R_num - orc.R_star)
        ok &= sup <= 5 * h and rerr <= 3 * h and dt < 120 and sol.converged
        parts.append(f"p={p:g}: sup={_g(sup)} R={_g(R_num)} R*={_g(orc.R_star)} |dR|={_g(rerr)} time={dt:.1f}s")
    return _result("radial_oracle", ok, "; ".join(parts), f"sup<=5h={_g(5 * h)} |dR|<=3h={_g(3 * h)} time<120s")


def _strip_rows(ctx: VerificationContext):
    rows = []
    for eps in SWEEP_EPSILONS:
        prob, sol, _ = ctx.solve(STRIP, 2.0, eps)
        rep = analyze(sol)
        d = prob.domain
        gap = abs(sol.breakdown.positivity - prob.alpha)
        attained = gap <= default_vol_tol(rep, d.h, d.dim)
        rows.append((eps, prob, sol, rep, attained))
    return rows


def check_lambda_bounds(ctx: VerificationContext) -> CheckResult:
    rows = [r for r in _strip_rows(ctx) if r[4]]
    if not rows:
        return _result("lambda_bounds", False, "no attained rows", "at least one")
    cv = [r[3].lambda_std / r[3].lambda_mean for r in rows]
    means = [r[3].lambda_mean for r in rows]
    spread = max(means) / min(means)
    ok = max(cv) < 0.1 and spread <= 2
    detail = " ".join(f"eps={r[0]:g}:lambda={_g(r[3].lambda_mean)}" for r in rows)
    return _result("lambda_bounds", ok, f"max std/mean={_g(max(cv))} max/min={_g(spread)}", "std/mean<0.1 max/min<=2", detail)


def _mixed_integrand(u: ScalarField, v: ScalarField, p: float) -> float:
    w = ScalarField(v.data - u.data, u.domain)
    gw = cell_gradient_sq(w)
    gu = np.sqrt(cell_gradient_sq(u))
    gv = np.sqrt(cell_gradient_sq(v))
    s = gu + gv
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(s > 0, gw * s ** (p - 2), 0.0)
    return float(u.domain.cell_volume * np.sum(term))


def check_replacement_inequality(ctx: VerificationContext, trials: int = 100) -> CheckResult:
    rng = np.random.default_rng(ctx.seed)
    d = build_rectangle(17, 17, 1.0 / 16)
    X, Y = d.coords
    worst = math.inf
    parts = []
    for p in (1.5, 2.0, 3.0):
        cfg = ctx.config(p)
        low = math.inf
        for _ in range(trials):
            kx, ky = rng.integers(1, 4, size=2)
            data = 1.5 + rng.uniform(-1, 1) * np.sin(kx * np.pi * X) * np.cos(ky * np.pi * Y) + 0.2 * rng.standard_normal(d.shape)
            u = ScalarField(np.maximum(data, 0.05), d)
            ci, cj = rng.integers(5, 12, size=2)
            rad = rng.uniform(2.0, 5.0)
            I, J = np.meshgrid(np.arange(17), np.arange(17), indexing="ij")
            ball = ((I - ci) ** 2 + (J - cj) ** 2 <= rad * rad) & d.interior_mask
            v, drop = harmonic_replacement(u, ball, cfg)
            if p >= 2:
                denom = dirichlet_p_energy(ScalarField(v.data - u.data, d), p)
            else:
                denom = _mixed_integrand(u, v, p)
            ratio = drop / denom if denom > 0 else math.inf
            low = min(low, ratio)
        parts.append(f"p={p:g}:min={_g(low)}")
        worst = min(worst, low)
    return _result("replacement_inequality", worst >= 1e-3, f"min ratio={_g(worst)}", ">=1e-3", " ".join(parts))


def check_density_bounds(ctx: VerificationContext) -> CheckResult:
    lo, hi, n = math.inf, -math.inf, 0
    parts = []
    for label, sol in ctx.two_dim_solutions():
        if not sol.converged:
            continue
        h = sol.domain.h
        rep = analyze(sol, density_radii=[k * h for k in DENSITY_CELLS])
        ratios = [r.ratio for r in rep.density_table]
        if ratios:
            lo, hi, n = min(lo, min(ratios)), max(hi, max(ratios)), n + len(ratios)
            parts.append(f"{label}:[{_g(min(ratios))},{_g(max(ratios))}] skipped={len(rep.skipped)}")
    ok = n > 0 and lo >= 0.05 and hi <= 0.95
    return _result("density_bounds", ok, f"min={_g(lo)} max={_g(hi)} rows={n}", "[0.05, 0.95]", "; ".join(parts))


def check_linear_growth(ctx: VerificationContext) -> CheckResult:
    ok = True
    parts = []
    sols = [(f"interval eps={e:g}", ctx.solve(INTERVAL, 2.0, e)[1]) for e in SWEEP_EPSILONS] + ctx.two_dim_solutions()
    for label, sol in sols:
        if not sol.converged:
            continue
        c_low, C_high = linear_growth_check(sol)
        good = c_low > 0 and math.isfinite(C_high)
        ok &= good
        if not good:
            parts.append(f"{label}: c_low={_g(c_low)} C_high={_g(C_high)}")
    band_lo, band_hi = math.inf, -math.inf
    h = None
    attained = [r for r in _strip_rows(ctx) if r[4]]
    for eps, prob, sol, rep, _ in attained:
        h = prob.domain.h
        c_low, C_high = linear_growth_check(sol, band=3)
        band_lo, band_hi = min(band_lo, c_low), max(band_hi, C_high)
    lam = 1.0 / 0.5
    if attained:
        ok &= lam * (1 - 10 * h) <= band_lo and band_hi <= lam * (1 + 10 * h)
        window = f"[{_g(lam * (1 - 10 * h))}, {_g(lam * (1 + 10 * h))}]"
    else:
        ok = False
        window = "no attained strip rows"
    return _result(
        "linear_growth",
        ok,
        f"strip near-FB c_low={_g(band_lo)} C_high={_g(band_hi)}",
        f"c_low>0, C_high<inf; strip {window}",
        "; ".join(parts),
    )


def check_blowup(ctx: VerificationContext, rhos=(0.2, 0.1, 0.05), floor: float = 1e-8) -> CheckResult:
    rows = [r for r in _strip_rows(ctx) if r[4]]
    if not rows:
        return _result("blowup", False, "no attained strip rows", "")
    eps, prob, sol, rep, _ = rows[len(rows) // 2]
    d = prob.domain
    mid = d.ny // 2
    k = int(np.argmin(np.abs(rep.fb_nodes[:, 1] - mid)))
    center = tuple(float(c) for c in rep.positions[k])
    dists, sides, mism = [], [], []
    for rho in rhos:
        v = blowup_rescale(sol, BlowupSpec(center, rho, 41))
        fit = fit_halfplane(v)
        dists.append(fit.sup_distance)
        sides.append(fit.side_violation / (d.h / rho))
        VX, VY = v.domain.coords
        half = (VX * fit.normal[0] + VY * fit.normal[1]) < fit.offset
        mism.append(float(np.mean(half != (v.data > 0))))
    monotone = all(b <= a + floor for a, b in zip(dists, dists[1:]))
    final_ok = dists[-1] <= 5 * d.h / min(rhos)
    side_ok = max(sides) <= 2
    ok = monotone and final_ok and side_ok
    return _result(
        "blowup",
        ok,
        "sup distances " + ",".join(_g(x) for x in dists),
        f"nonincreasing (+{floor:g}), final<=5h/rho={_g(5 * d.h / min(rhos))}, side<=2 cells",
        f"eps={eps:g} center={tuple(round(c, 6) for c in center)} side_cells={','.join(_g(s) for s in sides)} "
        f"indicator_mismatch={','.join(_g(m) for m in mism)}",
    )


def _flatness(ctx: VerificationContext, delta0: float):
    key = ("flatness", delta0)
    if key not in ctx._cache:
        ctx._cache[key] = flatness_decay_check(FlatnessConfig(delta0=delta0), ctx.config(2.0))
    return ctx._cache[key]


def check_flatness_decay(ctx: VerificationContext) -> CheckResult:
    h = FlatnessConfig().h
    cap = _flatness(ctx, 1.0 / 3.0)
    ctrl = _flatness(ctx, 1.0)
    zero = _flatness(ctx, 0.0)
    ok = cap.gamma < 1.0 and abs(ctrl.gamma - 1.0) <= 3 * h and zero.gamma < cap.gamma
    return _result(
        "flatness_decay",
        ok,
        f"gamma(1/3)={_g(cap.gamma)} margin={_g(cap.margin)} gamma(1)={_g(ctrl.gamma)} gamma(0)={_g(zero.gamma)}",
        f"gamma(1/3)<1, |gamma(1)-1|<=3h={_g(3 * h)}, gamma(0)<gamma(1/3)",
    )


def check_asymptotic_development(ctx: VerificationContext) -> CheckResult:
    cap = _flatness(ctx, 1.0 / 3.0)
    prof = halfplane_slope_profile(cap.field, radii=[0.4, 0.1])
    r_big, r_small = prof.residuals
    factor = r_big / r_small if r_small > 0 else math.inf
    return _result(
        "asymptotic_development",
        factor >= 2,
        f"residual(0.4)={_g(r_big)} residual(0.1)={_g(r_small)} factor={_g(factor)}",
        "factor>=2",
        f"alpha_est={_g(prof.alpha_est)}",
    )


def _penalty_pairs(rng, n: int):
    eps = Fraction(1, 10)
    alpha = Fraction(1, 2)
    params = PenaltyParams(eps, alpha)
    num = rng.integers(0, 2000, size=(n, 2))
    bad = 0
    for a, b in num:
        A, B = Fraction(int(max(a, b)), 1000), Fraction(int(min(a, b)), 1000)
        if penalty(A, params) - penalty(B, params) > (A - B) / eps:
            bad += 1
    return bad


def check_structural(ctx: VerificationContext, pairs: int = 100_000) -> CheckResult:
    nonmono = []
    for key, sol in ctx.solutions():
        totals = [b.total for b in sol.trace]
        if any(b > a for a, b in zip(totals, totals[1:])):
            nonmono.append(str(key))
    if not ctx.solutions():
        ctx.solve(INTERVAL, 2.0, 0.1)
        return check_structural(ctx, pairs)
    # determinism: fresh solves must match cached ones byte for byte
    fresh = VerificationContext(ctx.solver, ctx.seed)
    same = True
    for key, eps in ((INTERVAL, 0.1), (STRIP, 0.1)):
        a = ctx.solve(key, 2.0, eps)[1]
        b = fresh.solve(key, 2.0, eps)[1]
        same &= a.field.data.tobytes() == b.field.data.tobytes() and a.trace_csv() == b.trace_csv()
    bad = _penalty_pairs(np.random.default_rng(ctx.seed), pairs)
    ok = not nonmono and same and bad == 0
    return _result(
        "structural",
        ok,
        f"nonmonotone traces={len(nonmono)} deterministic={same} penalty violations={bad}/{pairs}",
        "0, True, 0",
        " ".join(nonmono),
    )


CHECKS: dict[str, Callable[[VerificationContext], CheckResult]] = {
    "volume_attainment": check_volume_attainment,
    "overshoot": check_overshoot,
    "radial_oracle": check_radial_oracle,
    "lambda_bounds": check_lambda_bounds,
    "replacement_inequality": check_replacement_inequality,
    "density_bounds": check_density_bounds,
    "linear_growth": check_linear_growth,
    "blowup": check_blowup,
    "flatness_decay": check_flatness_decay,
    "asymptotic_development": check_asymptotic_development,
    "structural": check_structural,
}
assert tuple(CHECKS) == ALL_CHECKS


def run_verification_suite(
    checks: Iterable[str] = ALL_CHECKS,
    solver: Mapping[str, object] | None = None,
    seed: int = 0,
    context: VerificationContext | None = None,
) -> list[CheckResult]:
    ctx = context if context is not None else VerificationContext(dict(solver or {}), seed)
    results = []
    for name in checks:
        try:
            fn = CHECKS[name]
        except KeyError:
            results.append(CheckResult(name, "error", "", "", "unknown check"))
            continue
        t0 = time.perf_counter()
        try:
            res = fn(ctx)
        except Exception as exc:  # recorded, suite continues
            logger.exception("check %s raised", name)
            res = CheckResult(name, "error", "", "", f"{type(exc).__name__}: {exc}")
        logger.info("%s: %s (%.1fs)", name, res.status, time.perf_counter() - t0)
        results.append(res)
    return results


def results_csv(results: Iterable[CheckResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CHECK_HEADER.split(","))
    for r in results:
        w.writerow([r.check, r.status, r.measured, r.threshold, r.detail])
    return buf.getvalue()
