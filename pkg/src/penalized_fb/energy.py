"""Discrete penalized functional and p-Laplacian residuals.

The squared gradient on a lattice cell is the mean of the squared scaled
differences along its edges (four edges in 2D, one in 1D).  For ``p = 2`` this
reproduces the 5-point Laplacian, linear fields have exact gradients, and the
energy is a convex function of the nodal values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridDomain, ScalarField, positivity_measure

__all__ = [
    "PenaltyParams",
    "EnergyBreakdown",
    "penalty",
    "cell_gradient_sq",
    "dirichlet_p_energy",
    "total_energy",
    "p_laplacian_residual",
]


@dataclass(frozen=True)
class PenaltyParams:
    epsilon: float
    alpha: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    def check_domain(self, domain: GridDomain) -> None:
        if not self.alpha < domain.area:
            raise ValueError(f"alpha={self.alpha} must be below the domain area {domain.area}")

    def __call__(self, s):
        return penalty(s, self)


def penalty(s, params: PenaltyParams):
    """Piecewise linear volume penalty: slope epsilon below alpha, 1/epsilon above.

    Works on Python scalars (including ``fractions.Fraction``) and on arrays.
    """
    eps, alpha = params.epsilon, params.alpha
    if isinstance(s, np.ndarray):
        return np.where(s < alpha, eps * (s - alpha), (s - alpha) / eps)
    if s < alpha:
        return eps * (s - alpha)
    return (s - alpha) / eps


@dataclass(frozen=True)
class EnergyBreakdown:
    dirichlet: float
    penalty: float
    total: float
    positivity: float

    CSV_HEADER = "dirichlet,penalty,total,positivity"

    def csv_row(self) -> str:
        return f"{self.dirichlet!r},{self.penalty!r},{self.total!r},{self.positivity!r}"

    @classmethod
    def from_csv_row(cls, row: str) -> "EnergyBreakdown":
        d, pen, tot, pos = (float(v) for v in row.strip().split(","))
        return cls(d, pen, tot, pos)


def _check_p(p: float) -> None:
    if not p > 1:
        raise ValueError(f"exponent p must exceed 1, got {p}")


def cell_gradient_sq(u: ScalarField) -> np.ndarray:
    """Squared gradient magnitude on every valid cell (ordering of ``operators``)."""
    return _cell_g2(u.data.ravel(), u.domain.operators)


def _cell_g2(x: np.ndarray, ops, cells=None) -> np.ndarray:
    corners = ops.cell_nodes if cells is None else ops.cell_nodes[cells]
    xc = x[corners]
    g2 = np.zeros(len(xc))
    for a, b in ops.cell_edges:
        d = xc[:, b] - xc[:, a]
        g2 += d * d
    return ops.edge_weight * g2


def dirichlet_p_energy(u: ScalarField, p: float) -> float:
    _check_p(p)
    g2 = cell_gradient_sq(u)
    return float(u.domain.cell_volume * np.sum(g2 ** (p / 2)))


def total_energy(u: ScalarField, p: float, params: PenaltyParams) -> EnergyBreakdown:
    dirichlet = dirichlet_p_energy(u, p)
    s = positivity_measure(u)
    pen = float(penalty(s, params))
    return EnergyBreakdown(dirichlet, pen, dirichlet + pen, s)


def p_laplacian_residual(u: ScalarField, p: float, eta: float = 0.0):
    """Two-point flux discretization of ``div((|grad u|^2 + eta^2)^((p-2)/2) grad u)``.

    Returns ``(residual, reported)``: the residual field (zero where not
    reported) and the boolean mask of interior nodes whose whole 3x3 stencil
    lies in the closure with ``u > 0``.
    """
    _check_p(p)
    d = u.domain
    h = d.h
    U = u.data
    pos = d.closure_mask & (U > 0)

    def conductivity(g2):
        with np.errstate(divide="ignore", invalid="ignore"):
            k = (g2 + eta * eta) ** ((p - 2) / 2)
        return np.where(g2 + eta * eta > 0, k, 0.0)

    res = np.zeros(d.shape)
    if d.dim == 1:
        dn = np.diff(U[:, 0]) / h
        flux = conductivity(dn * dn) * dn
        res[1:-1, 0] = (flux[1:] - flux[:-1]) / h
        full = pos[:-2, 0] & pos[1:-1, 0] & pos[2:, 0]
        reported = np.zeros(d.shape, dtype=bool)
        reported[1:-1, 0] = full & d.interior_mask[1:-1, 0]
    else:
        # x-edges between (i, j) and (i+1, j), tangential slope averaged from both ends
        dnx = (U[1:, 1:-1] - U[:-1, 1:-1]) / h
        tx = (U[1:, 2:] - U[1:, :-2] + U[:-1, 2:] - U[:-1, :-2]) / (4 * h)
        fx = conductivity(dnx**2 + tx**2) * dnx
        dny = (U[1:-1, 1:] - U[1:-1, :-1]) / h
        ty = (U[2:, 1:] - U[:-2, 1:] + U[2:, :-1] - U[:-2, :-1]) / (4 * h)
        fy = conductivity(dny**2 + ty**2) * dny
        res[1:-1, 1:-1] = (fx[1:, :] - fx[:-1, :] + fy[:, 1:] - fy[:, :-1]) / h
        full = np.ones((d.nx - 2, d.ny - 2), dtype=bool)
        for di in range(3):
            for dj in range(3):
                full &= pos[di : di + d.nx - 2, dj : dj + d.ny - 2]
        reported = np.zeros(d.shape, dtype=bool)
        reported[1:-1, 1:-1] = full & d.interior_mask[1:-1, 1:-1]
    res = np.where(reported, res, 0.0)
    return ScalarField(res, d), reported
