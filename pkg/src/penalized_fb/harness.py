"""Epsilon sweeps and on-disk artifacts."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path


from .config import RunConfig
from .energy import EnergyBreakdown, PenaltyParams
from .freeboundary import FreeBoundaryReport, analyze
from .grid import ScalarField, read_grid, write_grid, write_mask
from .problems import Problem
from .solver import Solution, solve_penalized

__all__ = [
    "SweepRow",
    "SweepReport",
    "SWEEP_HEADER",
    "run_epsilon_sweep",
    "default_vol_tol",
    "persist_run",
    "load_field",
    "run_dir_name",
]

logger = logging.getLogger(__name__)

SWEEP_HEADER = "epsilon,positivity,vol_gap,lambda_mean,lambda_std,energy,iters,converged"


@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    positivity: float
    vol_gap: float
    lambda_mean: float
    lambda_std: float
    energy: float
    iters: int
    converged: bool

    def csv_row(self) -> str:
        vals = (self.epsilon, self.positivity, self.vol_gap, self.lambda_mean, self.lambda_std, self.energy)
        return ",".join(repr(float(v)) for v in vals) + f",{self.iters},{str(self.converged).lower()}"


@dataclass
class SweepReport:
    rows: list[SweepRow]
    alpha: float
    vol_tols: list[float]
    elapsed: list[float] = field(default_factory=list, compare=False)
    solutions: dict[float, Solution] = field(default_factory=dict, repr=False, compare=False)
    reports: dict[float, FreeBoundaryReport] = field(default_factory=dict, repr=False, compare=False)

    @property
    def epsilon_attained(self) -> float | None:
        """Largest epsilon whose positivity is within the volume tolerance of alpha."""
        hits = [r.epsilon for r, tol in zip(self.rows, self.vol_tols) if r.vol_gap <= tol]
        return max(hits) if hits else None

    def attained_rows(self) -> list[SweepRow]:
        return [r for r, tol in zip(self.rows, self.vol_tols) if r.vol_gap <= tol]

    def csv(self) -> str:
        return SWEEP_HEADER + "\n" + "".join(r.csv_row() + "\n" for r in self.rows)


def default_vol_tol(report: FreeBoundaryReport, h: float, dim: int) -> float:
    """Two lattice layers along the free boundary: ``2 h^N`` per boundary edge (at least one edge)."""
    edges = report.perimeter / h ** (dim - 1)
    return 2 * h**dim * max(edges, 1.0)


def run_dir_name(epsilon: float) -> str:
    return f"eps_{epsilon:g}"


def persist_run(directory, sol: Solution, report: FreeBoundaryReport) -> None:
    """Grid dumps, trace, energy and free-boundary CSVs for one solve."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    d = sol.domain
    write_grid(out / "field.txt", sol.field)
    write_mask(out / "mask.txt", d, d.interior_mask & (sol.field.data > 0))
    (out / "trace.csv").write_text(sol.trace_csv())
    (out / "energy.csv").write_text(EnergyBreakdown.CSV_HEADER + "\n" + sol.breakdown.csv_row() + "\n")
    (out / "fb.csv").write_text(report.fb_csv(d))
    (out / "density.csv").write_text(report.density_csv())
    (out / "summary.csv").write_text(report.summary_csv())


def load_field(path, problem: Problem) -> ScalarField:
    data, nx, ny, h = read_grid(path)
    d = problem.domain
    if (nx, ny) != d.shape or not math.isclose(h, d.h, rel_tol=1e-15):
        raise ValueError("dump does not match the problem lattice")
    return ScalarField(data, d)


def _solve_one(args):
    config, eps, initial = args
    prob = config.build(eps)
    t0 = time.perf_counter()
    sol = solve_penalized(prob.domain, prob.bdata, config.p, PenaltyParams(eps, prob.alpha), config.solver_config(), initial)
    return sol, time.perf_counter() - t0


def _row(eps: float, sol: Solution, report: FreeBoundaryReport, alpha: float) -> SweepRow:
    b = sol.breakdown
    return SweepRow(
        float(eps),
        b.positivity,
        abs(b.positivity - alpha),
        report.lambda_mean,
        report.lambda_std,
        b.total,
        sol.iterations,
        sol.converged,
    )


def run_epsilon_sweep(config: RunConfig, persist: bool = True, workers: int = 1) -> SweepReport:
    """One independent solve per epsilon, largest first; rows in that order.

    With ``config.warm_start`` each solve starts from the previous solution
    (forces sequential execution).
    """
    eps_list = list(config.epsilon_list)
    results: list[tuple[Solution, float]] = []
    if config.warm_start:
        initial = None
        for eps in eps_list:
            sol, dt = _solve_one((config, eps, initial))
            initial = sol.field
            results.append((sol, dt))
    elif workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_solve_one, [(config, e, None) for e in eps_list]))
    else:
        results = [_solve_one((config, e, None)) for e in eps_list]

    rows, tols, elapsed, sols, reps = [], [], [], {}, {}
    alpha = config.build(eps_list[0]).alpha
    for eps, (sol, dt) in zip(eps_list, results):
        d = sol.domain
        if not sol.converged:
            logger.warning("epsilon=%g did not converge within %d outer steps", eps, sol.config.max_outer)
        report = analyze(sol)
        rows.append(_row(eps, sol, report, alpha))
        tols.append(config.vol_tol if config.vol_tol is not None else default_vol_tol(report, d.h, d.dim))
        elapsed.append(dt)
        sols[eps] = sol
        reps[eps] = report
        if persist:
            persist_run(Path(config.output_dir) / run_dir_name(eps), sol, report)
    out = SweepReport(rows, alpha, tols, elapsed, sols, reps)
    if persist:
        Path(config.output_dir).mkdir(parents=True, exist_ok=True)
        (Path(config.output_dir) / "sweep.csv").write_text(out.csv())
    return out
