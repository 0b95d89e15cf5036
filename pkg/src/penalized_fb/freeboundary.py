"""Free-boundary extraction and the quantitative checks run on minimizers.

Conventions: the unit normal at a free-boundary node points from the positive
phase toward the zero phase, so the one-plane profile is
``lam * max(c - x.nu, 0)``.  Lattice distances are in units of ``h``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import ndimage
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import least_squares

from .energy import cell_gradient_sq, dirichlet_p_energy
from .grid import BoundaryData, GridDomain, ScalarField, build_halfdisk, build_rectangle

__all__ = [
    "FreeBoundaryReport",
    "DensityRow",
    "BlowupSpec",
    "PlaneFit",
    "GradientFit",
    "SlopeProfile",
    "FlatnessConfig",
    "FlatnessResult",
    "NondegeneracySample",
    "extract_free_boundary",
    "estimate_lambda",
    "density_ratios",
    "linear_growth_check",
    "gradient_bound_fit",
    "blowup_rescale",
    "fit_halfplane",
    "blowup_sequence",
    "halfplane_slope_profile",
    "flatness_decay_check",
    "nondegeneracy_samples",
    "analyze",
]

logger = logging.getLogger(__name__)


def _field(obj) -> ScalarField:
    return obj if isinstance(obj, ScalarField) else obj.field


@dataclass(frozen=True)
class DensityRow:
    cx: float
    cy: float
    r: float
    ratio: float


@dataclass
class FreeBoundaryReport:
    fb_nodes: np.ndarray
    positions: np.ndarray
    normals: np.ndarray
    perimeter: float
    flux: np.ndarray | None = None
    lambda_mean: float = math.nan
    lambda_std: float = math.nan
    lambda_nodes: np.ndarray | None = None
    density_table: list[DensityRow] = field(default_factory=list)
    skipped: list[tuple[float, float, float, str]] = field(default_factory=list)
    c_low: float = math.nan
    C_high: float = math.nan
    C_fit: float = math.nan
    gamma_fit: float = math.nan

    @property
    def empty(self) -> bool:
        return len(self.fb_nodes) == 0

    def fb_csv(self, domain: GridDomain) -> str:
        lines = ["node,x,y,flux,nx,ny"]
        flux = self.flux if self.flux is not None else np.full(len(self.fb_nodes), math.nan)
        for (i, j), (x, y), q, (n0, n1) in zip(self.fb_nodes, self.positions, flux, self.normals):
            lines.append(f"{domain.flat((i, j))},{x!r},{y!r},{float(q)!r},{n0!r},{n1!r}")
        return "\n".join(lines) + "\n"

    def density_csv(self) -> str:
        lines = ["cx,cy,r,ratio"]
        lines += [f"{d.cx!r},{d.cy!r},{d.r!r},{d.ratio!r}" for d in self.density_table]
        return "\n".join(lines) + "\n"

    SUMMARY_HEADER = "lambda_mean,lambda_std,perimeter,c_low,C_high,C_fit,gamma_fit"

    def summary_csv(self) -> str:
        vals = (self.lambda_mean, self.lambda_std, self.perimeter, self.c_low, self.C_high, self.C_fit, self.gamma_fit)
        return self.SUMMARY_HEADER + "\n" + ",".join(repr(float(v)) for v in vals) + "\n"


# ---------------------------------------------------------------------------
# extraction


def _four_neighbors(domain: GridDomain):
    if domain.dim == 1:
        return [(-1, 0), (1, 0)]
    return [(-1, 0), (1, 0), (0, -1), (0, 1)]


def _shift(a: np.ndarray, di: int, dj: int, fill) -> np.ndarray:
    """``out[i, j] = a[i + di, j + dj]`` with ``fill`` outside the array."""
    out = np.full_like(a, fill)
    nx, ny = a.shape
    si = slice(max(-di, 0), nx - max(di, 0))
    sj = slice(max(-dj, 0), ny - max(dj, 0))
    ti = slice(max(di, 0), nx - max(-di, 0))
    tj = slice(max(dj, 0), ny - max(-dj, 0))
    out[si, sj] = a[ti, tj]
    return out


def _phases(u: ScalarField):
    d = u.domain
    interior = d.interior_mask
    pos = interior & (u.data > 0)
    zero = interior & ~(u.data > 0)
    return pos, zero


def _indicator_normals(u: ScalarField, nodes: np.ndarray) -> np.ndarray:
    d = u.domain
    chi = (d.closure_mask & (u.data > 0)).astype(float)
    if d.dim == 1:
        g = np.zeros(d.nx)
        g[1:-1] = chi[2:, 0] - chi[:-2, 0]
        gx = g[nodes[:, 0]]
        nx = np.where(gx > 0, -1.0, np.where(gx < 0, 1.0, 0.0))
        return np.column_stack([nx, np.zeros_like(nx)])
    gx = ndimage.sobel(chi, axis=0, mode="nearest")[nodes[:, 0], nodes[:, 1]]
    gy = ndimage.sobel(chi, axis=1, mode="nearest")[nodes[:, 0], nodes[:, 1]]
    norm = np.hypot(gx, gy)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.column_stack([-gx / norm, -gy / norm])
    return np.where(norm[:, None] > 0, out, 0.0)


def extract_free_boundary(sol) -> FreeBoundaryReport:
    """Positive interior nodes with a zero interior 4-neighbor, their normals and the edge perimeter."""
    u = _field(sol)
    d = u.domain
    pos, zero = _phases(u)
    touching = np.zeros(d.shape, dtype=bool)
    edges = 0
    for di, dj in _four_neighbors(d):
        nb_zero = _shift(zero, di, dj, False)
        touching |= pos & nb_zero
        if di > 0 or dj > 0:
            edges += int(np.count_nonzero(pos & nb_zero)) + int(np.count_nonzero(zero & _shift(pos, di, dj, False)))
    nodes = np.argwhere(touching)
    X, Y = d.coords
    positions = np.column_stack([X[touching], Y[touching]]) if len(nodes) else np.zeros((0, 2))
    normals = _indicator_normals(u, nodes) if len(nodes) else np.zeros((0, 2))
    perimeter = edges * d.h ** (d.dim - 1)
    return FreeBoundaryReport(nodes, positions, normals, float(perimeter))


# ---------------------------------------------------------------------------
# flux


def _sampler(u: ScalarField):
    d = u.domain
    X, Y = d.coords
    if d.dim == 1:
        xs = X[:, 0]
        vals = u.data[:, 0]
        return lambda pts: np.interp(np.asarray(pts)[:, 0], xs, vals)
    interp = RegularGridInterpolator((X[:, 0], Y[0, :]), u.data, bounds_error=False, fill_value=None)
    return lambda pts: interp(np.asarray(pts))


def estimate_lambda(sol, report: FreeBoundaryReport | None = None, min_distance: float = 2.0) -> FreeBoundaryReport:
    """Per-node flux ``(u(x - h nu) - u(x)) / h`` and its mean/std away from the fixed boundary."""
    u = _field(sol)
    d = u.domain
    report = extract_free_boundary(u) if report is None else report
    if report.empty:
        raise ValueError("free boundary is empty; configuration is degenerate")
    sample = _sampler(u)
    inner = report.positions - d.h * report.normals
    here = u.data[report.fb_nodes[:, 0], report.fb_nodes[:, 1]]
    flux = np.maximum((sample(inner) - here) / d.h, 0.0)
    far = d.boundary_distance[report.fb_nodes[:, 0], report.fb_nodes[:, 1]] >= min_distance
    report.flux = flux
    report.lambda_nodes = far
    if far.any():
        report.lambda_mean = float(np.mean(flux[far]))
        report.lambda_std = float(np.std(flux[far]))
    return report


# ---------------------------------------------------------------------------
# density


def _disk(radius_cells: float) -> np.ndarray:
    R = int(math.floor(radius_cells + 1e-9))
    I, J = np.mgrid[-R : R + 1, -R : R + 1]
    return (I * I + J * J) <= radius_cells * radius_cells + 1e-9


def density_ratios(sol, radii: Sequence[float], report: FreeBoundaryReport | None = None) -> FreeBoundaryReport:
    """Fraction of positive nodes in the lattice ball of each radius around each free-boundary node.

    Radii below ``4h`` or reaching the fixed boundary are skipped and recorded
    in ``report.skipped``.
    """
    u = _field(sol)
    d = u.domain
    report = extract_free_boundary(u) if report is None else report
    pos = (d.closure_mask & (u.data > 0)).astype(float)
    inside = d.closure_mask.astype(float)
    bdist = d.boundary_distance
    rows, skipped = [], []
    for r in radii:
        rc = r / d.h
        fp = _disk(rc) if d.dim == 2 else np.ones((2 * int(math.floor(rc + 1e-9)) + 1, 1), dtype=bool)
        cnt_pos = ndimage.correlate(pos, fp.astype(float), mode="constant")
        cnt_all = ndimage.correlate(inside, fp.astype(float), mode="constant")
        for (i, j), (x, y) in zip(report.fb_nodes, report.positions):
            if rc < 4 - 1e-9:
                skipped.append((float(x), float(y), float(r), "radius below 4h"))
            elif rc >= bdist[i, j]:
                skipped.append((float(x), float(y), float(r), "ball reaches the fixed boundary"))
            else:
                rows.append(DensityRow(float(x), float(y), float(r), float(cnt_pos[i, j] / cnt_all[i, j])))
    if skipped:
        logger.info("density: skipped %d (node, radius) pairs", len(skipped))
    report.density_table = rows
    report.skipped = skipped
    return report


# ---------------------------------------------------------------------------
# growth away from the free boundary


def linear_growth_check(sol, margin: float = 2.0, band: float | None = None) -> tuple[float, float]:
    """``(min, max)`` of ``u / dist(x, zero set)`` over positive nodes at least ``margin`` from the boundary.

    ``band`` (lattice units) restricts to nodes that close to the zero set.
    """
    u = _field(sol)
    d = u.domain
    positive = d.interior_mask & (u.data > 0)
    zero = d.closure_mask & ~(u.data > 0)
    if not zero.any():
        raise ValueError("no zero nodes: growth is undefined")
    dist = ndimage.distance_transform_edt(~zero) * d.h
    sel = positive & (d.boundary_distance >= margin)
    if band is not None:
        sel &= dist <= band * d.h + 1e-12
    if not sel.any():
        raise ValueError("no qualifying positive nodes")
    ratio = u.data[sel] / dist[sel]
    return float(ratio.min()), float(ratio.max())


class GradientFit(NamedTuple):
    C: float
    gamma: float
    degenerate: bool
    radii: np.ndarray
    m: np.ndarray


def _cell_centers(domain: GridDomain) -> np.ndarray:
    ci = domain.operators.cell_index
    x0, y0 = domain.origin
    h = domain.h
    if domain.dim == 1:
        return np.column_stack([x0 + (ci[:, 0] + 0.5) * h, np.full(len(ci), y0)])
    return np.column_stack([x0 + (ci[:, 0] + 0.5) * h, y0 + (ci[:, 1] + 0.5) * h])


def gradient_bound_fit(sol, radii: Sequence[float], report: FreeBoundaryReport | None = None, lam: float | None = None) -> GradientFit:
    """Fit ``sup_{B_r} |grad u| <= lam (1 + C r^gamma)`` over free-boundary nodes.

    ``m(r)`` is the largest cell gradient within distance ``r`` of any
    free-boundary node kept for the flux statistics.
    """
    radii = np.asarray(radii, dtype=float)
    if len(radii) < 3:
        raise ValueError("need at least three radii")
    u = _field(sol)
    d = u.domain
    if report is None or report.flux is None:
        report = estimate_lambda(u, report)
    lam = report.lambda_mean if lam is None else lam
    centers = report.positions[report.lambda_nodes] if report.lambda_nodes is not None else report.positions
    if len(centers) == 0:
        raise ValueError("no free-boundary nodes away from the boundary")
    grad = np.sqrt(cell_gradient_sq(u))
    cc = _cell_centers(d)
    m = np.zeros(len(radii))
    for c in centers:
        dist = np.hypot(cc[:, 0] - c[0], cc[:, 1] - c[1])
        for k, r in enumerate(radii):
            near = dist <= r
            if near.any():
                m[k] = max(m[k], float(grad[near].max()))
    excess = m / lam - 1.0
    y = np.log(np.maximum(excess, 1e-12))
    degenerate = bool(np.all(excess <= 1e-12))
    slope, intercept = np.polyfit(np.log(radii), y, 1)
    C = 0.0 if degenerate else float(np.exp(intercept))
    if degenerate:
        logger.info("gradient fit degenerate: m(r) does not exceed lambda")
    return GradientFit(C, float(slope), degenerate, radii, m)


# ---------------------------------------------------------------------------
# blow-ups


@dataclass(frozen=True)
class BlowupSpec:
    center: tuple[float, float]
    rho: float
    resolution: int = 41

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.resolution < 5:
            raise ValueError("resolution must be at least 5")


def blowup_rescale(sol, spec: BlowupSpec) -> ScalarField:
    """Sample ``u(x0 + rho x) / rho`` for ``x`` on a lattice over ``[-1, 1]^N``."""
    u = _field(sol)
    d = u.domain
    if spec.rho < 4 * d.h - 1e-12:
        raise ValueError(f"rho={spec.rho} is below 4h={4 * d.h}")
    m = spec.resolution
    step = 2.0 / (m - 1)
    target = build_rectangle(m, 1 if d.dim == 1 else m, step, origin=(-1.0, -1.0 if d.dim == 2 else 0.0))
    TX, TY = target.coords
    cx, cy = spec.center
    px = cx + spec.rho * TX
    py = cy + spec.rho * TY if d.dim == 2 else np.full_like(TX, cy)
    # every lattice cell used by the interpolation must lie in the closure
    fi = (px - d.origin[0]) / d.h
    i0 = np.floor(fi + 1e-9).astype(int)
    i1 = np.minimum(i0 + 1, d.nx - 1)
    if d.dim == 2:
        fj = (py - d.origin[1]) / d.h
        j0 = np.floor(fj + 1e-9).astype(int)
        j1 = np.minimum(j0 + 1, d.ny - 1)
    else:
        j0 = j1 = np.zeros_like(i0)
    if i0.min() < 0 or j0.min() < 0 or i0.max() >= d.nx or j0.max() >= d.ny:
        raise ValueError("blow-up window leaves the lattice")
    cl = d.closure_mask
    if not (cl[i0, j0] & cl[i1, j0] & cl[i0, j1] & cl[i1, j1]).all():
        raise ValueError("blow-up window leaves the domain")
    sample = _sampler(u)
    vals = sample(np.column_stack([px.ravel(), py.ravel()])).reshape(target.shape) / spec.rho
    return ScalarField(vals, target)


@dataclass(frozen=True)
class PlaneFit:
    lam: float
    normal: tuple[float, float]
    offset: float
    sup_distance: float
    side_violation: float

    def profile(self, X, Y):
        return self.lam * np.maximum(self.offset - (X * self.normal[0] + Y * self.normal[1]), 0.0)


def fit_halfplane(v: ScalarField) -> PlaneFit:
    """Least-squares fit of ``lam * max(c - x.nu, 0)`` to a rescaled field.

    ``side_violation`` is the largest distance of a positive node beyond the
    fitted plane on its zero side (0 when positivity is one-sided).
    """
    d = v.domain
    X, Y = d.coords
    U = v.data
    dim = d.dim
    pos = U > 0
    if dim == 1:
        gx = np.gradient(U[:, 0], X[:, 0])
        theta0 = math.pi if np.mean(gx) > 0 else 0.0
    else:
        gx = np.gradient(U, X[:, 0], axis=0)
        gy = np.gradient(U, Y[0, :], axis=1)
        theta0 = math.atan2(-np.mean(gy), -np.mean(gx))
    lam0 = max(float(np.max(np.abs(np.gradient(U.ravel())))) / (X[1, 0] - X[0, 0]), 1e-12)

    def model(q):
        lam, theta, c = q
        nu = (math.cos(theta), math.sin(theta))
        return lam * np.maximum(c - (X * nu[0] + Y * nu[1]), 0.0)

    def resid(q):
        return (model(q) - U).ravel()

    if dim == 1:
        # theta is 0 or pi in 1D
        best = None
        for th in (0.0, math.pi):
            r = least_squares(lambda q: resid((q[0], th, q[1])), x0=[lam0, 0.0])
            if best is None or r.cost < best[0]:
                best = (r.cost, (r.x[0], th, r.x[1]))
        q = best[1]
    else:
        r = least_squares(resid, x0=[lam0, theta0, 0.0])
        q = tuple(r.x)
    lam, theta, c = q
    if lam < 0:
        lam, theta, c = -lam, theta + math.pi, -c
    nu = (math.cos(theta), math.sin(theta))
    sup = float(np.max(np.abs(model((lam, theta, c)) - U)))
    side = X * nu[0] + Y * nu[1] - c
    viol = float(np.max(side[pos], initial=0.0))
    return PlaneFit(float(lam), (float(nu[0]), float(nu[1])), float(c), sup, max(viol, 0.0))


def blowup_sequence(sol, center, rhos: Sequence[float], resolution: int = 41) -> list[tuple[float, PlaneFit]]:
    """Plane fits of the rescales at each radius, in the order given."""
    out = []
    for rho in rhos:
        v = blowup_rescale(sol, BlowupSpec(tuple(center), float(rho), resolution))
        out.append((float(rho), fit_halfplane(v)))
    return out


# ---------------------------------------------------------------------------
# half-ball analysis


class SlopeProfile(NamedTuple):
    alpha_est: float
    level_radii: np.ndarray
    level_slopes: np.ndarray
    radii: np.ndarray
    residuals: np.ndarray


def halfplane_slope_profile(u: ScalarField, radii: Sequence[float] | None = None, center=(0.0, 0.0)) -> SlopeProfile:
    """Slope of ``u`` against the distance to the flat side, from dyadic half-balls.

    Level ``j`` uses ``sup u / x_N`` over the half-ball of radius ``2**-j``;
    the estimate is the smallest level value.  ``residuals[k]`` is
    ``sup |u - alpha_est x_N| / r`` over the half-ball of radius ``radii[k]``.
    """
    d = u.domain
    if d.dim != 2:
        raise ValueError("half-ball analysis needs a 2D lattice")
    X, Y = d.coords
    xr, yr = X - center[0], Y - center[1]
    dist = np.hypot(xr, yr)
    upper = d.closure_mask & (yr > 1e-12)
    levels = []
    r = 1.0
    while r >= 4 * d.h - 1e-12:
        levels.append(r)
        r /= 2
    if len(levels) < 3:
        raise ValueError("fewer than three dyadic levels are resolvable")
    slopes = []
    for r in levels:
        sel = upper & (dist <= r + 1e-12)
        slopes.append(float(np.max(u.data[sel] / yr[sel])))
    alpha = min(slopes)
    if radii is None:
        radii = levels
    radii = np.asarray(radii, dtype=float)
    res = np.empty(len(radii))
    for k, r in enumerate(radii):
        sel = upper & (dist <= r + 1e-12)
        res[k] = float(np.max(np.abs(u.data[sel] - alpha * yr[sel]))) / r
    return SlopeProfile(float(alpha), np.array(levels), np.array(slopes), radii, res)


@dataclass(frozen=True)
class FlatnessConfig:
    delta0: float = 1.0 / 3.0
    p: float = 2.0
    h: float = 1.0 / 64
    cap_angle: float = math.pi / 2
    cap_width: float = math.pi / 4
    ramp_width: float = math.pi / 8
    inner_radius: float = 0.25

    def __post_init__(self):
        if not 0 <= self.delta0 <= 1:
            raise ValueError("delta0 must lie in [0, 1]")
        if not 0 < self.cap_angle < math.pi:
            raise ValueError("cap center must lie on the open upper arc")


class FlatnessResult(NamedTuple):
    gamma: float
    decayed: bool
    margin: float
    field: ScalarField
    converged: bool


def cap_multiplier(theta, cfg: FlatnessConfig):
    """``delta0`` on the cap, 1 away from it, linear across the ramp."""
    off = np.abs(np.asarray(theta) - cfg.cap_angle)
    half = cfg.cap_width / 2
    t = np.clip((off - half) / cfg.ramp_width, 0.0, 1.0)
    return cfg.delta0 + (1.0 - cfg.delta0) * t


def flatness_decay_check(cfg: FlatnessConfig, solver_config=None) -> FlatnessResult:
    """p-harmonic function on the unit half-disk with data ``x_N`` reduced on a cap.

    Returns ``sup psi / x_N`` over the half-ball of radius ``inner_radius``.
    """
    from .solver import SolverConfig, p_harmonic_solve, p_harmonic_relax

    d = build_halfdisk(1.0, cfg.h)

    def arc(X, Y):
        return Y * cap_multiplier(np.arctan2(Y, X), cfg)

    bdata = BoundaryData.from_segments(d, {"flat": 0.0, "arc": arc})
    scfg = SolverConfig(p=cfg.p) if solver_config is None else solver_config
    u0 = ScalarField.zeros(d).with_boundary(bdata)
    psi = p_harmonic_solve(u0, d.interior_mask, scfg)
    X, Y = d.coords
    # convergence: a further relaxation sweep should not move the field
    check = p_harmonic_relax(psi, d.interior_mask, SolverConfig(p=cfg.p, relax_iters=1))
    converged = bool(np.max(np.abs(check.data - psi.data)) <= 1e-8)
    sel = d.interior_mask & (Y > 1e-12) & (np.hypot(X, Y) <= cfg.inner_radius + 1e-12)
    gamma = float(np.max(psi.data[sel] / Y[sel]))
    return FlatnessResult(gamma, gamma < 1.0, 1.0 - gamma, psi, converged)


# ---------------------------------------------------------------------------
# nondegeneracy


class NondegeneracySample(NamedTuple):
    center: tuple[float, float]
    r: float
    lhs: float
    zero_measure: float
    mean_over_r: float
    C: float


def nondegeneracy_samples(sol, radii: Sequence[float], n_centers: int = 8, seed: int = 0, p: float | None = None) -> list[NondegeneracySample]:
    """Both sides of ``int |grad(u - v)|^p >= C |B_r n {u=0}| (mean_{B_r} u / r)^p``.

    ``v`` is the p-harmonic replacement of ``u`` on the ball; balls are
    centered at free-boundary nodes drawn with ``seed``.  Each sample records
    the implied constant ``C``.
    """
    from .solver import SolverConfig, harmonic_replacement

    u = _field(sol)
    d = u.domain
    p = sol.p if p is None else p
    report = extract_free_boundary(u)
    if report.empty:
        raise ValueError("free boundary is empty")
    rng = np.random.default_rng(seed)
    bdist = d.boundary_distance
    X, Y = d.coords
    out = []
    cfg = SolverConfig(p=p)
    for r in radii:
        ok = bdist[report.fb_nodes[:, 0], report.fb_nodes[:, 1]] > r / d.h + 1
        idx = np.flatnonzero(ok)
        if idx.size == 0:
            continue
        pick = rng.choice(idx, size=min(n_centers, idx.size), replace=False)
        for k in np.sort(pick):
            cx, cy = report.positions[k]
            ball = (np.hypot(X - cx, Y - cy) <= r + 1e-12) & d.interior_mask
            v, _ = harmonic_replacement(u, ball, cfg)
            lhs = dirichlet_p_energy(ScalarField(u.data - v.data, d), p)
            zero_measure = int(np.count_nonzero(ball & ~(u.data > 0))) * d.cell_volume
            mean_over_r = float(np.mean(u.data[ball])) / r
            denom = zero_measure * mean_over_r**p
            C = lhs / denom if denom > 0 else math.inf
            out.append(NondegeneracySample((float(cx), float(cy)), float(r), float(lhs), zero_measure, mean_over_r, float(C)))
    return out


# ---------------------------------------------------------------------------


def analyze(sol, density_radii: Sequence[float] | None = None, fit_radii: Sequence[float] | None = None) -> FreeBoundaryReport:
    """Full report: free boundary, flux statistics, densities, growth bounds and gradient fit."""
    u = _field(sol)
    d = u.domain
    report = extract_free_boundary(u)
    if report.empty:
        return report
    estimate_lambda(u, report)
    if density_radii is None:
        density_radii = [4 * d.h, 8 * d.h, 16 * d.h] if d.dim == 2 else [4 * d.h, 8 * d.h]
    density_ratios(u, density_radii, report)
    try:
        report.c_low, report.C_high = linear_growth_check(u)
    except ValueError as exc:
        logger.info("growth check skipped: %s", exc)
    if fit_radii is None:
        fit_radii = [2 * d.h, 4 * d.h, 8 * d.h]
    if not math.isnan(report.lambda_mean):
        fit = gradient_bound_fit(u, fit_radii, report)
        report.C_fit, report.gamma_fit = fit.C, fit.gamma
    return report
