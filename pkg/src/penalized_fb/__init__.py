"""Lattice solver and diagnostics for the penalized volume-constrained free boundary problem.

Minimizes ``sum |grad u|^p h^N + F_eps(|{u > 0}|)`` over nonnegative lattice
functions with Dirichlet data, where ``F_eps`` charges ``eps`` per unit of
missing volume and ``1/eps`` per unit of excess.
"""

from __future__ import annotations

from .config import ALL_CHECKS, ConfigError, RunConfig, parse_config, parse_config_text
from .energy import EnergyBreakdown, PenaltyParams, dirichlet_p_energy, p_laplacian_residual, penalty, total_energy
from .freeboundary import FreeBoundaryReport, analyze, extract_free_boundary
from .grid import BoundaryData, GridDomain, ScalarField, build_annulus, build_halfdisk, build_rectangle, positivity_measure
from .harness import SweepReport, run_epsilon_sweep
from .oracles import oracle_1d_minimizer, oracle_annulus_minimizer, radial_p_harmonic
from .problems import PROBLEMS, Problem, build_problem
from .solver import Solution, SolverConfig, harmonic_replacement, solve_penalized
from .verification import CheckResult, run_verification_suite

__version__ = "0.1.0"

__all__ = [
    "ALL_CHECKS",
    "BoundaryData",
    "CheckResult",
    "ConfigError",
    "EnergyBreakdown",
    "FreeBoundaryReport",
    "GridDomain",
    "PROBLEMS",
    "PenaltyParams",
    "Problem",
    "RunConfig",
    "ScalarField",
    "Solution",
    "SolverConfig",
    "SweepReport",
    "analyze",
    "build_annulus",
    "build_halfdisk",
    "build_problem",
    "build_rectangle",
    "dirichlet_p_energy",
    "extract_free_boundary",
    "harmonic_replacement",
    "oracle_1d_minimizer",
    "oracle_annulus_minimizer",
    "p_laplacian_residual",
    "parse_config",
    "parse_config_text",
    "penalty",
    "positivity_measure",
    "radial_p_harmonic",
    "run_epsilon_sweep",
    "run_verification_suite",
    "solve_penalized",
    "total_energy",
]
