"""Closed-form and brute-force reference solutions.

* the one-dimensional minimizer over ramps ``u(x) = b * max(1 - x/s, 0)``,
* radial p-harmonic profiles ``a + b*phi(r)`` between two spheres,
* the radial minimizer of Dirichlet energy plus ``(1/eps)`` times shell volume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .energy import PenaltyParams, penalty

__all__ = [
    "Oracle1DResult",
    "RadialProfile",
    "AnnulusResult",
    "ramp_energy",
    "oracle_1d_minimizer",
    "oracle_1d_scan",
    "kink_bracket",
    "radial_p_harmonic",
    "sphere_area",
    "shell_volume",
    "annulus_energy",
    "oracle_annulus_minimizer",
]

BRANCHES = ("below_alpha", "at_kink", "above_alpha")


@dataclass(frozen=True)
class Oracle1DResult:
    s_star: float
    lambda_star: float
    energy: float
    branch: str

    CSV_HEADER = "s_star,lambda_star,energy,branch"

    def csv_row(self) -> str:
        return f"{self.s_star!r},{self.lambda_star!r},{self.energy!r},{self.branch}"


def ramp_energy(s, b: float, p: float, params: PenaltyParams):
    """J of the ramp with height ``b`` at 0 that vanishes at ``s`` (unit interval)."""
    s = np.asarray(s, dtype=float)
    out = b**p * s ** (1 - p) + penalty(s, params)
    return float(out) if out.ndim == 0 else out


def oracle_1d_scan(b: float, p: float, epsilon: float, alpha: float, s_grid: int = 2001):
    """Sample points ``s`` in (0, 1] and the ramp energies on them."""
    params = PenaltyParams(epsilon, alpha)
    s = np.linspace(1.0 / s_grid, 1.0, s_grid)
    return s, ramp_energy(s, b, p, params)


def oracle_1d_minimizer(b: float, p: float, epsilon: float, alpha: float, s_grid: int = 2001) -> Oracle1DResult:
    """Exhaustive scan over the ramp family, refined by ternary search.

    The constraint value ``alpha`` is always among the candidates so that a
    minimum sitting on the kink is reported exactly.  Ties go to the smaller s.
    """
    if not b > 0:
        raise ValueError("b must be positive")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if not p > 1:
        raise ValueError("p must exceed 1")
    params = PenaltyParams(epsilon, alpha)
    s, E = oracle_1d_scan(b, p, epsilon, alpha, s_grid)
    k = int(np.argmin(E))
    lo = s[max(k - 1, 0)] if k > 0 else s[0] / 2
    hi = s[min(k + 1, len(s) - 1)]
    f = lambda t: ramp_energy(t, b, p, params)
    for _ in range(200):
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if f(m1) <= f(m2):
            hi = m2
        else:
            lo = m1
    # points within rounding of alpha are alpha; otherwise they steal the tie-break
    snap = lambda c: float(alpha) if abs(c - alpha) <= 1e-12 * max(1.0, alpha) else float(c)
    cands = sorted({snap(s[k]), snap(0.5 * (lo + hi)), float(alpha)})
    vals = [f(c) for c in cands]
    best = min(range(len(cands)), key=lambda i: (vals[i], cands[i]))
    s_star = float(cands[best])
    if s_star == alpha:
        branch = "at_kink"
    elif s_star < alpha:
        branch = "below_alpha"
    else:
        branch = "above_alpha"
    return Oracle1DResult(s_star, b / s_star, vals[best], branch)


def kink_bracket(b: float, p: float, alpha: float) -> float:
    """Largest epsilon for which the 1D ramp minimizer sits exactly at ``alpha``.

    The one-sided slopes at the kink are ``eps - K`` and ``1/eps - K`` with
    ``K = (p-1)(b/alpha)^p``; zero lies between them iff ``eps <= min(K, 1/K)``.
    """
    K = (p - 1) * (b / alpha) ** p
    return min(K, 1.0 / K)


# ---------------------------------------------------------------------------
# radial profiles


def sphere_area(N: int) -> float:
    """Measure of the unit sphere in R^N (two points when N = 1)."""
    if N < 1:
        raise ValueError("N must be at least 1")
    if N == 1:
        return 2.0
    return 2 * math.pi ** (N / 2) / math.gamma(N / 2)


def shell_volume(r0: float, r1: float, N: int) -> float:
    return sphere_area(N) / N * (r1**N - r0**N)


@dataclass(frozen=True)
class RadialProfile:
    """``w(r) = a + b*phi(r)``, ``phi = r**k`` with ``k = (p-N)/(p-1)``, or ``log r`` when p = N."""

    inner_r: float
    outer_r: float
    a: float
    b: float
    p: float
    N: int

    @property
    def exponent(self) -> float | None:
        if self.p == self.N:
            return None
        return (self.p - self.N) / (self.p - 1)

    def basis(self, r):
        k = self.exponent
        r = np.asarray(r, dtype=float)
        return np.log(r) if k is None else r**k

    def basis_derivative(self, r):
        k = self.exponent
        r = np.asarray(r, dtype=float)
        return 1.0 / r if k is None else k * r ** (k - 1)

    def __call__(self, r):
        out = self.a + self.b * self.basis(r)
        return float(out) if np.ndim(out) == 0 else out

    def derivative(self, r):
        out = self.b * self.basis_derivative(r)
        return float(out) if np.ndim(out) == 0 else out

    @property
    def flux(self) -> float:
        """Conserved radial flux ``|w'|^(p-1) r^(N-1)``."""
        r = self.inner_r
        return abs(self.derivative(r)) ** (self.p - 1) * r ** (self.N - 1)

    def dirichlet_energy(self) -> float:
        """p-energy over the shell between ``inner_r`` and ``outer_r``."""
        jump = abs(self(self.outer_r) - self(self.inner_r))
        return sphere_area(self.N) * self.flux * jump

    def extended(self, r):
        """Profile on the shell, held at its end values outside it."""
        r = np.clip(np.asarray(r, dtype=float), self.inner_r, self.outer_r)
        return self(r)


def radial_p_harmonic(inner_r: float, outer_r: float, inner_val: float, outer_val: float, p: float, N: int) -> RadialProfile:
    if not 0 < inner_r < outer_r:
        raise ValueError("radii must satisfy 0 < inner_r < outer_r")
    if not p > 1:
        raise ValueError("p must exceed 1")
    if N < 1:
        raise ValueError("N must be at least 1")
    probe = RadialProfile(inner_r, outer_r, 0.0, 1.0, p, N)
    f0, f1 = probe.basis(inner_r), probe.basis(outer_r)
    b = (outer_val - inner_val) / (f1 - f0)
    a = inner_val - b * f0
    return RadialProfile(inner_r, outer_r, float(a), float(b), p, N)


# ---------------------------------------------------------------------------
# radial minimizer of Dirichlet energy plus volume cost


class AnnulusResult(NamedTuple):
    R_star: float
    profile: RadialProfile
    energy: float
    R_grid: np.ndarray
    energies: np.ndarray


def annulus_energy(R, delta: float, c0: float, p: float, N: int, epsilon: float):
    """Energy of the radial profile dropping from ``c0`` at ``delta`` to 0 at ``R``, plus shell volume / eps."""
    R = np.atleast_1d(np.asarray(R, dtype=float))
    out = np.empty_like(R)
    for i, r in enumerate(R):
        prof = radial_p_harmonic(delta, r, c0, 0.0, p, N)
        out[i] = prof.dirichlet_energy() + shell_volume(delta, r, N) / epsilon
    return out


def oracle_annulus_minimizer(
    delta: float, c0: float, p: float, N: int, epsilon: float, R_grid=4000
) -> AnnulusResult:
    """Scan support radii in (delta, 2*delta] and refine the best one locally.

    ``R_grid`` is either a sample count or an explicit increasing array.
    """
    if not delta > 0 or not epsilon > 0 or not c0 > 0:
        raise ValueError("delta, epsilon and c0 must be positive")
    if np.ndim(R_grid) == 0:
        n = int(R_grid)
        R = delta + delta * np.arange(1, n + 1) / n
    else:
        R = np.asarray(R_grid, dtype=float)
        if np.any(R <= delta) or np.any(np.diff(R) <= 0):
            raise ValueError("R_grid must be increasing and exceed delta")
    E = annulus_energy(R, delta, c0, p, N, epsilon)
    k = int(np.argmin(E))
    R_star, E_star = float(R[k]), float(E[k])
    lo = float(R[k - 1]) if k > 0 else delta + 0.5 * (R[0] - delta)
    hi = float(R[min(k + 1, len(R) - 1)])
    if hi > lo:
        res = minimize_scalar(
            lambda r: annulus_energy(r, delta, c0, p, N, epsilon)[0],
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-12},
        )
        if res.fun < E_star:
            R_star, E_star = float(res.x), float(res.fun)
    profile = radial_p_harmonic(delta, R_star, c0, 0.0, p, N)
    return AnnulusResult(R_star, profile, E_star, R, E)
