"""Minimization of the penalized functional over fixed Dirichlet data.

The outer loop alternates three monotone steps:

* truncation of negative values,
* p-harmonic relaxation on the current positivity set,
* toggling of nodes next to the free boundary, accepted only when the exact
  discrete functional strictly decreases.

Relaxation uses a damped Newton method on the discrete energy (exact energy in
the line search, ``eta`` only in derivatives); ``p_harmonic_relax`` provides
nodal Gauss-Seidel sweeps as the fallback and as a standalone smoother.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import MatrixRankWarning, spsolve

from .energy import EnergyBreakdown, PenaltyParams, _cell_g2, penalty, total_energy
from .grid import BoundaryData, GridDomain, LatticeOperators, ScalarField, positivity_measure

__all__ = [
    "SolverConfig",
    "Solution",
    "truncate_negative",
    "p_harmonic_relax",
    "p_harmonic_solve",
    "harmonic_replacement",
    "toggle_sweep",
    "exchange_sweep",
    "solve_penalized",
]

logger = logging.getLogger(__name__)

_GOLDEN = (np.sqrt(5.0) - 1) / 2


@dataclass(frozen=True)
class SolverConfig:
    p: float = 2.0
    eta: float | None = None
    max_outer: int = 500
    relax_iters: int = 50
    tol_energy: float = 1e-9
    toggle_passes: int = 4
    toggle_radius: int | None = None
    relax_method: str = "newton"
    newton_tol: float = 1e-14
    newton_maxiter: int = 60
    seed: int = 0

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if not self.tol_energy > 0:
            raise ValueError("tol_energy must be positive")
        for name in ("max_outer", "relax_iters", "toggle_passes", "newton_maxiter"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.eta is not None and self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if self.relax_method not in ("newton", "sweep"):
            raise ValueError(f"unknown relax_method {self.relax_method!r}")
        if self.toggle_radius is not None and self.toggle_radius < 1:
            raise ValueError("toggle_radius must be at least 1")


@dataclass
class Solution:
    field: ScalarField
    breakdown: EnergyBreakdown
    trace: list[EnergyBreakdown]
    toggles: list[int]
    lipschitz_estimate: float
    converged: bool
    p: float
    params: PenaltyParams
    bdata: BoundaryData
    config: SolverConfig = field(default_factory=SolverConfig)

    @property
    def domain(self) -> GridDomain:
        return self.field.domain

    @property
    def iterations(self) -> int:
        return len(self.trace) - 1

    def trace_csv(self) -> str:
        lines = ["iter,dirichlet,penalty,total,positivity,toggles"]
        for k, (b, t) in enumerate(zip(self.trace, self.toggles)):
            lines.append(f"{k},{b.csv_row()},{t}")
        return "\n".join(lines) + "\n"


def _eta(config: SolverConfig, scale: float, h: float) -> float:
    if config.eta is not None:
        return config.eta
    return 1e-10 * max(scale, 1e-300) / h


# ---------------------------------------------------------------------------
# energy restricted to the cells around a set of unknowns


class _LocalModel:
    """Dirichlet p-energy of the cells touching ``free`` as a function of their nodes."""

    def __init__(self, ops: LatticeOperators, free: np.ndarray, p: float, eta: float):
        around = ops.node_cells[free].ravel()
        cells = np.unique(around[around >= 0])
        corners = ops.cell_nodes[cells]
        self.nodes, inv = np.unique(corners.ravel(), return_inverse=True)
        self.corners = inv.reshape(corners.shape)
        self.free = free
        self.loc = np.searchsorted(self.nodes, free)
        slot = np.full(len(self.nodes), -1)
        slot[self.loc] = np.arange(len(free))
        fc = slot[self.corners]
        k = fc.shape[1]
        rows = np.repeat(fc, k, axis=1).ravel()
        cols = np.tile(fc, (1, k)).ravel()
        self.hkeep = (rows >= 0) & (cols >= 0)
        self.hrows, self.hcols = rows[self.hkeep], cols[self.hkeep]
        self.gkeep = fc.ravel() >= 0
        self.gidx = fc.ravel()[self.gkeep]
        M = np.zeros((k, k))
        for a, b in ops.cell_edges:
            M[a, a] += 1
            M[b, b] += 1
            M[a, b] -= 1
            M[b, a] -= 1
        self.M = ops.edge_weight * M
        self.edges = ops.cell_edges
        self.weight = ops.edge_weight
        self.vol = ops.cell_volume
        self.p = p
        self.eta2 = eta * eta

    def _g2(self, xc: np.ndarray) -> np.ndarray:
        g2 = np.zeros(len(xc))
        for a, b in self.edges:
            d = xc[:, b] - xc[:, a]
            g2 += d * d
        return self.weight * g2

    def cell_energies(self, x: np.ndarray) -> np.ndarray:
        return self.vol * self._g2(x[self.corners]) ** (self.p / 2)

    def energy(self, x: np.ndarray) -> float:
        return float(np.sum(self.cell_energies(x)))

    def grad_hess(self, x: np.ndarray):
        p, vol = self.p, self.vol
        xc = x[self.corners]
        ge = self._g2(xc) + self.eta2
        dg = 2 * xc @ self.M
        s = vol * (p / 2) * ge ** (p / 2 - 1)
        n = len(self.free)
        grad = np.bincount(self.gidx, weights=(s[:, None] * dg).ravel()[self.gkeep], minlength=n)
        if p == 2:
            t = np.zeros_like(ge)
        else:
            with np.errstate(divide="ignore"):
                t = vol * (p / 2) * (p / 2 - 1) * ge ** (p / 2 - 2)
            t[~np.isfinite(t)] = 0.0
        blocks = 2 * s[:, None, None] * self.M[None] + t[:, None, None] * dg[:, :, None] * dg[:, None, :]
        H = sp.csc_matrix((blocks.ravel()[self.hkeep], (self.hrows, self.hcols)), shape=(n, n))
        return grad, H


def _newton(model: _LocalModel, x: np.ndarray, tol: float, maxiter: int):
    """Damped Newton on the free entries of ``x``; returns (x, converged)."""
    E = model.energy(x)
    for _ in range(maxiter):
        g, H = model.grad_hess(x)
        with warnings.catch_warnings():
            warnings.simplefilter("error", MatrixRankWarning)
            try:
                d = spsolve(H, -g)
            except (MatrixRankWarning, RuntimeError):
                return x, False
        d = np.atleast_1d(d)
        if not np.all(np.isfinite(d)):
            return x, False
        dec = -float(g @ d)
        if dec <= tol * max(abs(E), 1e-300):
            return x, True
        if dec < 0:
            return x, False
        step = 1.0
        while True:
            xn = x.copy()
            xn[model.loc] += step * d
            En = model.energy(xn)
            if En <= E - 1e-4 * step * dec:
                break
            step *= 0.5
            if step < 1e-12:
                # no further decrease representable: at the discrete minimum
                return x, True
        x, E = xn, En
        if model.p == 2 and step == 1.0:
            return x, True
    return x, False


# ---------------------------------------------------------------------------
# nodal minimization (colored Gauss-Seidel)


def _cell_valid_array(domain: GridDomain) -> np.ndarray:
    ops = domain.operators
    if domain.dim == 1:
        valid = np.zeros(domain.nx - 1, dtype=bool)
        valid[ops.cell_index[:, 0]] = True
    else:
        valid = np.zeros((domain.nx - 1, domain.ny - 1), dtype=bool)
        valid[ops.cell_index[:, 0], ops.cell_index[:, 1]] = True
    return valid


def _nodal_terms(domain: GridDomain, U: np.ndarray, I: np.ndarray, J: np.ndarray, valid_cells):
    """Per-node cell terms ``q(t) = w/h^2 (sum_k (t - nb_k)^2 + R)``."""
    if domain.dim == 1:
        nbs, rests, valids = [], [], []
        for s in (-1, 1):
            nbs.append(U[I + s, 0][None, :])
            rests.append(np.zeros(len(I)))
            valids.append(valid_cells[np.minimum(I, I + s)])
        return np.stack(nbs), np.stack(rests), np.stack(valids), 1.0
    nbs, rests, valids = [], [], []
    for sx in (-1, 1):
        for sy in (-1, 1):
            X = U[I + sx, J]
            Y = U[I, J + sy]
            G = U[I + sx, J + sy]
            nbs.append(np.stack([X, Y]))
            rests.append((G - X) ** 2 + (G - Y) ** 2)
            valids.append(valid_cells[np.minimum(I, I + sx), np.minimum(J, J + sy)])
    return np.stack(nbs), np.stack(rests), np.stack(valids), 0.5


def _nodal_minimize(domain, U, I, J, p, eta, valid_cells, newton_cap=40, golden_cap=80):
    """Minimize the local energy at each listed node independently (vectorized)."""
    h2 = domain.h**2
    vol = domain.cell_volume
    nb, R, valid, w = _nodal_terms(domain, U, I, J, valid_cells)
    K = nb.shape[1]
    vf = valid.astype(float)
    has_cells = valid.any(axis=0)

    big = np.where(valid[:, None, :], nb, np.inf)
    small = np.where(valid[:, None, :], nb, -np.inf)
    lo = big.min(axis=(0, 1))
    hi = small.max(axis=(0, 1))
    lo = np.where(has_cells, lo, U[I, J])
    hi = np.where(has_cells, hi, U[I, J])

    def q_of(t):
        return (w / h2) * (((t[None, None, :] - nb) ** 2).sum(axis=1) + R)

    def phi(t):
        return vol * (vf * q_of(t) ** (p / 2)).sum(axis=0)

    def derivs(t):
        qe = q_of(t) + eta * eta
        dq = (w / h2) * 2 * (t[None, None, :] - nb).sum(axis=1)
        d1 = vol * (vf * (p / 2) * qe ** (p / 2 - 1) * dq).sum(axis=0)
        d2 = vol * (
            vf * (p / 2) * (qe ** (p / 2 - 1) * (w / h2) * 2 * K + (p / 2 - 1) * qe ** (p / 2 - 2) * dq * dq)
        ).sum(axis=0)
        return d1, d2

    t0 = U[I, J].copy()
    t = np.clip(t0, lo, hi)
    done = ~has_cells | (hi - lo <= 0)
    for _ in range(newton_cap):
        if done.all():
            break
        d1, d2 = derivs(t)
        hi = np.where(~done & (d1 > 0), t, hi)
        lo = np.where(~done & (d1 < 0), t, lo)
        with np.errstate(divide="ignore", invalid="ignore"):
            tn = t - d1 / d2
        bad = ~np.isfinite(tn) | (tn <= lo) | (tn >= hi) | (d2 <= 0)
        tn = np.where(bad, 0.5 * (lo + hi), tn)
        tn = np.where(d1 == 0, t, tn)
        step_small = np.abs(tn - t) <= 1e-15 * (1 + np.abs(t))
        t = np.where(done, t, tn)
        done |= step_small | (hi - lo <= 1e-15 * (1 + np.abs(t)))
    if not done.all():
        # golden-section fallback on the exact local energy
        a, b = lo.copy(), hi.copy()
        for _ in range(golden_cap):
            c = b - _GOLDEN * (b - a)
            d = a + _GOLDEN * (b - a)
            left = phi(c) < phi(d)
            b = np.where(~done & left, d, b)
            a = np.where(~done & ~left, c, a)
        t = np.where(done, t, 0.5 * (a + b))
    # never increase the local energy
    keep = phi(t) > phi(t0)
    return np.where(keep | ~has_cells, t0, t)


def _node_optimum(ops: LatticeOperators, flat: np.ndarray, k: int, p: float, eta: float, maxiter: int = 60) -> float:
    """Minimizer of the cell energy around node ``k`` over its own value."""
    around = ops.node_cells[k]
    corners = ops.cell_nodes[around[around >= 0]]
    xc = flat[corners]
    own = corners == k
    others = xc[~own]
    lo, hi = float(others.min()), float(others.max())
    if hi <= lo:
        return lo
    # per-cell squared gradient is A t^2 + B t + C in the node value t
    vals = []
    for t in (0.0, 1.0, -1.0):
        xt = np.where(own, t, xc)
        g = np.zeros(len(xt))
        for a, b in ops.cell_edges:
            g += (xt[:, b] - xt[:, a]) ** 2
        vals.append(ops.edge_weight * g)
    C = vals[0]
    A = 0.5 * (vals[1] + vals[2]) - C
    B = 0.5 * (vals[1] - vals[2])

    def phi(t):
        return float(np.sum(np.maximum(A * t * t + B * t + C, 0.0) ** (p / 2)))

    e2 = eta * eta
    t = min(max(float(flat[k]), lo), hi)
    for _ in range(maxiter):
        ge = np.maximum(A * t * t + B * t + C, 0.0) + e2
        dg = 2 * A * t + B
        d1 = float(np.sum(ge ** (p / 2 - 1) * dg))
        d2 = float(np.sum(ge ** (p / 2 - 1) * 2 * A + (p / 2 - 1) * ge ** (p / 2 - 2) * dg * dg))
        if d1 > 0:
            hi = t
        elif d1 < 0:
            lo = t
        else:
            break
        tn = t - d1 / d2 if d2 > 0 else 0.5 * (lo + hi)
        if not lo < tn < hi:
            tn = 0.5 * (lo + hi)
        if abs(tn - t) <= 1e-15 * (1 + abs(t)) or hi - lo <= 1e-15 * (1 + abs(t)):
            t = tn
            break
        t = tn
    t0 = float(flat[k])
    return t if phi(t) <= phi(t0) else t0


def _colors(domain: GridDomain):
    if domain.dim == 1:
        return [(c, None) for c in (0, 1)]
    return [(ci, cj) for ci in (0, 1) for cj in (0, 1)]


def _sweep(domain, U, active, p, eta, valid_cells):
    I_all, J_all = np.nonzero(active)
    for ci, cj in _colors(domain):
        sel = I_all % 2 == ci
        if cj is not None:
            sel &= J_all % 2 == cj
        I, J = I_all[sel], J_all[sel]
        if len(I):
            U[I, J] = _nodal_minimize(domain, U, I, J, p, eta, valid_cells)
    return U


def _active_mask(u: ScalarField, active) -> np.ndarray:
    interior = u.domain.interior_mask
    if active is None:
        return interior.copy()
    return np.asarray(active, dtype=bool) & interior


def p_harmonic_relax(u: ScalarField, active, config: SolverConfig) -> ScalarField:
    """``relax_iters`` sweeps of nodewise exact minimization over ``active`` nodes."""
    d = u.domain
    act = _active_mask(u, active)
    eta = _eta(config, float(np.abs(u.data).max(initial=0.0)), d.h)
    valid = _cell_valid_array(d)
    U = u.data.copy()
    for _ in range(config.relax_iters):
        _sweep(d, U, act, config.p, eta, valid)
    return ScalarField(U, d)


def p_harmonic_solve(u: ScalarField, active, config: SolverConfig) -> ScalarField:
    """Discrete p-harmonic extension of ``u`` off ``active`` (Newton, sweep fallback)."""
    d = u.domain
    act = _active_mask(u, active)
    free = np.flatnonzero(act.ravel())
    if free.size == 0:
        return u.copy()
    if config.relax_method == "sweep":
        return p_harmonic_relax(u, act, config)
    eta = _eta(config, float(np.abs(u.data).max(initial=0.0)), d.h)
    x_full, model, ok = _minimize_free(u.data.ravel(), free, d.operators, config, eta)
    out = ScalarField(x_full.reshape(d.shape), d)
    if not ok:
        logger.debug("Newton relaxation stalled; finishing with nodal sweeps")
        out = p_harmonic_relax(out, act, config)
    return out


def _minimize_free(flat: np.ndarray, free: np.ndarray, ops, config: SolverConfig, eta: float):
    """Newton minimization over ``free``; for p != 2 it starts from the harmonic extension when that is lower."""
    x_full = flat.copy()
    model = _LocalModel(ops, free, config.p, eta)
    x0 = x_full[model.nodes]
    if config.p != 2:
        lin = _LocalModel(ops, free, 2.0, 0.0)
        x_lin, ok = _newton(lin, x_full[lin.nodes], 1e-14, 2)
        cand = x0.copy()
        cand[model.loc] = x_lin[lin.loc]
        if ok and model.energy(cand) < model.energy(x0):
            x0 = cand
    x, ok = _newton(model, x0, config.newton_tol, config.newton_maxiter)
    x_full[model.nodes] = x
    return x_full, model, ok


def _newton_patch(u_flat: np.ndarray, free: np.ndarray, ops, config: SolverConfig, eta: float):
    model = _LocalModel(ops, free, config.p, eta)
    x, _ = _newton(model, u_flat[model.nodes], config.newton_tol, config.newton_maxiter)
    out = u_flat.copy()
    out[model.nodes] = x
    return out


def truncate_negative(u: ScalarField) -> ScalarField:
    data = np.where(u.domain.boundary_mask, u.data, np.maximum(u.data, 0.0))
    return ScalarField(data, u.domain)


def harmonic_replacement(u: ScalarField, ball, config: SolverConfig):
    """Replace ``u`` on ``ball`` by its discrete p-harmonic extension.

    Returns ``(v, drop)`` with ``drop`` the decrease of the Dirichlet p-energy.
    """
    d = u.domain
    act = _active_mask(u, ball)
    free = np.flatnonzero(act.ravel())
    if free.size == 0:
        return u.copy(), 0.0
    eta = _eta(config, float(np.abs(u.data).max(initial=0.0)), d.h)
    x_full, model, ok = _minimize_free(u.data.ravel(), free, d.operators, config, eta)
    x0 = u.data.ravel()[model.nodes]
    x = x_full[model.nodes]
    if not ok:
        v = p_harmonic_relax(ScalarField(x_full.reshape(d.shape), d), act, config)
        x, _ = _newton(model, v.data.ravel()[model.nodes], config.newton_tol, config.newton_maxiter)
    drop = float(np.sum(model.cell_energies(x0) - model.cell_energies(x)))
    return ScalarField(_scatter(u, model.nodes, x), d), max(drop, 0.0)


def _scatter(u: ScalarField, nodes, x) -> np.ndarray:
    flat = u.data.ravel().copy()
    flat[nodes] = x
    return flat.reshape(u.domain.shape)


# ---------------------------------------------------------------------------
# free-boundary toggling


class _Evaluator:
    """Exact penalized functional on flat nodal vectors of one domain."""

    def __init__(self, domain: GridDomain, p: float, params: PenaltyParams):
        self.ops = domain.operators
        self.vol = domain.cell_volume
        self.interior = domain.interior_mask.ravel()
        self.p = p
        self.params = params

    def __call__(self, flat: np.ndarray) -> float:
        g2 = _cell_g2(flat, self.ops)
        dirichlet = float(self.vol * np.sum(g2 ** (self.p / 2)))
        return dirichlet + float(penalty(self.positivity(flat), self.params))

    def positivity(self, flat: np.ndarray) -> float:
        return int(np.count_nonzero(self.interior & (flat > 0))) * self.vol

    def change(self, old: np.ndarray, new: np.ndarray, nodes: np.ndarray, s_old: float):
        """Exact change of the functional when only ``nodes`` differ; returns (dE, s_new)."""
        around = self.ops.node_cells[nodes].ravel()
        cells = np.unique(around[around >= 0])
        e_old = _cell_g2(old, self.ops, cells) ** (self.p / 2)
        e_new = _cell_g2(new, self.ops, cells) ** (self.p / 2)
        inner = nodes[self.interior[nodes]]
        dcount = int(np.count_nonzero(new[inner] > 0)) - int(np.count_nonzero(old[inner] > 0))
        s_new = s_old + dcount * self.vol
        dpen = float(penalty(s_new, self.params)) - float(penalty(s_old, self.params))
        return self.vol * float(np.sum(e_new - e_old)) + dpen, s_new


def _toggle_candidates(domain: GridDomain, flat: np.ndarray) -> np.ndarray:
    nbr = domain.operators.neighbors
    closure = domain.closure_mask.ravel()
    interior = domain.interior_mask.ravel()
    pos = closure & (flat > 0)
    has = nbr >= 0
    nb_pos = np.where(has, pos[np.where(has, nbr, 0)], False)
    nb_zero = np.where(has, ~pos[np.where(has, nbr, 0)], False)
    zero_moves = interior & pos & nb_zero.any(axis=1)
    free_moves = interior & ~pos & nb_pos.any(axis=1)
    return np.flatnonzero(zero_moves | free_moves)


def _patch(domain: GridDomain, k: int, radius: int | None) -> np.ndarray:
    if radius is None:
        radius = max(domain.nx, domain.ny) if domain.dim == 1 else 8
    i, j = domain.unflat(k)
    I0, I1 = max(i - radius, 0), min(i + radius + 1, domain.nx)
    J0, J1 = max(j - radius, 0), min(j + radius + 1, domain.ny)
    I, J = np.meshgrid(np.arange(I0, I1), np.arange(J0, J1), indexing="ij")
    near = (I - i) ** 2 + (J - j) ** 2 <= radius * radius
    return (I[near] * domain.ny + J[near]).ravel()


class _Toggler:
    """Mutable state of a toggling pass: current field, positivity and move machinery."""

    def __init__(self, u: ScalarField, p: float, params: PenaltyParams, config: SolverConfig):
        d = u.domain
        self.d = d
        self.ops = d.operators
        self.interior = d.interior_mask.ravel()
        self.evaluate = _Evaluator(d, p, params)
        self.eta = _eta(config, float(np.abs(u.data).max(initial=0.0)), d.h)
        self.p = p
        self.config = config
        self.flat = u.data.ravel().copy()
        # accepted moves must beat rounding in the full sum by a wide margin
        self.floor = 1e-12 * max(abs(self.evaluate(self.flat)), 1e-300)
        self.s = self.evaluate.positivity(self.flat)

    def bare(self, nodes) -> np.ndarray | None:
        """Field with ``nodes`` toggled: positives zeroed first, then zeros freed at their one-node optimum."""
        cand = self.flat.copy()
        freeing = [k for k in nodes if not self.flat[k] > 0]
        for k in nodes:
            if self.flat[k] > 0:
                cand[k] = 0.0
        for k in freeing:
            cand[k] = _node_optimum(self.ops, cand, k, self.p, self.eta)
            if not cand[k] > 0:
                return None
        return cand

    def change(self, cand, touched):
        return self.evaluate.change(self.flat, cand, touched, self.s)

    def attempt(self, nodes, cand=None, dE=None) -> bool:
        """Apply the toggle of ``nodes`` if it strictly lowers the functional (bare, then patch-relaxed)."""
        nodes = np.asarray(nodes)
        if cand is None:
            cand = self.bare(nodes)
            if cand is None:
                return False
            dE, s_new = self.change(cand, nodes)
        else:
            s_new = self.change(cand, nodes)[1]
        if not dE < -self.floor:
            zeroed = nodes[cand[nodes] == 0]
            patch = np.unique(np.concatenate([_patch(self.d, k, self.config.toggle_radius) for k in nodes]))
            patch = patch[self.interior[patch]]
            free = patch[(cand[patch] > 0) & ~np.isin(patch, zeroed)]
            if free.size == 0:
                return False
            touched = np.union1d(free, nodes)
            cand = _newton_patch(cand, free, self.ops, self.config, self.eta)
            cand[touched] = np.maximum(cand[touched], 0.0)
            dE, s_new = self.change(cand, touched)
            if not dE < -self.floor:
                return False
        self.flat, self.s = cand, s_new
        return True

    def field(self) -> ScalarField:
        return ScalarField(self.flat.reshape(self.d.shape), self.d)


def _ranked(toggler: _Toggler, cands: np.ndarray, rng):
    """Candidates ordered by the energy change of their bare toggle; ties broken by a seeded shuffle."""
    keys = rng.permutation(len(cands))
    scores = np.full(len(cands), np.inf)
    bare = [None] * len(cands)
    for n, k in enumerate(cands):
        cand = toggler.bare([k])
        if cand is not None:
            bare[n] = cand
            scores[n] = toggler.change(cand, np.array([k]))[0]
    order = np.lexsort((keys, scores))
    return [(cands[n], bare[n], scores[n]) for n in order if bare[n] is not None]


def toggle_sweep(u: ScalarField, p: float, params: PenaltyParams, config: SolverConfig, rng=None):
    """One pass over the nodes next to the free boundary.

    Positive nodes are tentatively zeroed, zero nodes tentatively freed with
    their one-node p-harmonic value.  Candidates are visited from the most to
    the least favorable bare toggle (ties shuffled with ``rng``).  A bare
    toggle that does not lower the functional is re-relaxed on a patch of
    ``toggle_radius`` lattice units and tried again.  Acceptance requires a
    strict decrease of the exact functional.
    """
    rng = np.random.default_rng(config.seed) if rng is None else rng
    t = _Toggler(u, p, params, config)
    nbr = t.ops.neighbors
    changed = 0
    for k, cand, dE in _ranked(t, _toggle_candidates(t.d, t.flat), rng):
        nb = nbr[k][nbr[k] >= 0]
        nb_pos = t.flat[nb] > 0
        if (t.flat[k] > 0 and nb_pos.all()) or (not t.flat[k] > 0 and not nb_pos.any()):
            continue
        if cand[k] != t.flat[k] and (t.flat[k] > 0) == (cand[k] == 0):
            # the bare toggle was computed on an older field; refresh it
            cand = t.bare([k])
            if cand is None:
                continue
            dE = t.change(cand, np.array([k]))[0]
        if t.attempt([k], cand, dE):
            changed += 1
    return t.field(), changed


def exchange_sweep(u: ScalarField, p: float, params: PenaltyParams, config: SolverConfig, rng=None, radius: float | None = None):
    """Volume-preserving moves: zero one boundary node and free another (within ``radius`` if given).

    Single toggles cannot cross the kink of the penalty cheaply, so a rough
    free boundary at the target area needs paired moves to relax.
    """
    rng = np.random.default_rng(config.seed) if rng is None else rng
    t = _Toggler(u, p, params, config)
    d = t.d
    nbr = t.ops.neighbors
    changed = 0
    cands = _toggle_candidates(d, t.flat)
    pos_c = cands[t.flat[cands] > 0]
    zero_c = cands[~(t.flat[cands] > 0)]

    def exposure(k):
        nb = nbr[k][nbr[k] >= 0]
        return int(np.count_nonzero((t.flat[nb] > 0) != (t.flat[k] > 0)))

    # most exposed nodes first: bumps to remove, dents to fill
    pos_c = pos_c[np.lexsort((rng.permutation(len(pos_c)), [-exposure(k) for k in pos_c]))]
    used = set()
    for k in pos_c:
        if not t.flat[k] > 0 or k in used:
            continue
        ki, kj = d.unflat(k)
        near = []
        for m in zero_c:
            if m in used or t.flat[m] > 0:
                continue
            mi, mj = d.unflat(m)
            dist = math.hypot(ki - mi, kj - mj)
            if radius is None or dist <= radius:
                near.append((-exposure(m), dist, m))
        for _, _, m in sorted(near):
            if t.attempt([k, m]):
                used.update((k, m))
                changed += 1
                break
    return t.field(), changed


# ---------------------------------------------------------------------------


def lipschitz_estimate(u: ScalarField) -> float:
    du = u.domain.operators.D @ u.data.ravel()
    return float(np.abs(du).max(initial=0.0))


def solve_penalized(
    domain: GridDomain,
    bdata: BoundaryData,
    p: float,
    params: PenaltyParams,
    config: SolverConfig | None = None,
    initial: ScalarField | None = None,
) -> Solution:
    """Descent solver for the penalized volume problem on a lattice."""
    config = SolverConfig(p=p) if config is None else replace(config, p=p)
    params.check_domain(domain)
    if bdata.domain is not domain:
        raise ValueError("boundary data belongs to a different domain")

    if initial is None:
        u = ScalarField.zeros(domain).with_boundary(bdata)
        u = p_harmonic_solve(u, domain.interior_mask, config)
    else:
        u = initial.with_boundary(bdata)
    u = truncate_negative(u)
    rng = np.random.default_rng(config.seed)

    current = total_energy(u, p, params)
    trace = [current]
    toggles = [0]
    converged = False
    for it in range(1, config.max_outer + 1):
        E_prev = current.total
        u = truncate_negative(u)
        relaxed = truncate_negative(p_harmonic_solve(u, u.data > 0, config))
        if total_energy(relaxed, p, params).total <= total_energy(u, p, params).total:
            u = relaxed
        changed = 0
        for _ in range(config.toggle_passes):
            u, c = toggle_sweep(u, p, params, config, rng)
            changed += c
            if c == 0:
                break
        if changed == 0 and abs(positivity_measure(u) - params.alpha) <= 2 * domain.cell_volume:
            # on the kink: only volume-preserving moves can still lower the energy
            for _ in range(config.toggle_passes):
                u, c = exchange_sweep(u, p, params, config, rng)
                changed += c
                if c == 0:
                    break
        current = total_energy(u, p, params)
        trace.append(current)
        toggles.append(changed)
        logger.debug("outer %d: total=%.12g positivity=%.6g toggles=%d", it, current.total, current.positivity, changed)
        if changed == 0 and E_prev - current.total <= config.tol_energy * max(abs(E_prev), 1e-300):
            converged = True
            break

    return Solution(
        field=u,
        breakdown=current,
        trace=trace,
        toggles=toggles,
        lipschitz_estimate=lipschitz_estimate(u),
        converged=converged,
        p=p,
        params=params,
        bdata=bdata,
        config=config,
    )
