"""Command line entry point: ``penalized-fb <command> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ALL_CHECKS, ConfigError, parse_config
from .energy import EnergyBreakdown, PenaltyParams
from .freeboundary import analyze
from .harness import persist_run, run_dir_name, run_epsilon_sweep
from .oracles import Oracle1DResult, oracle_1d_minimizer, oracle_1d_scan, oracle_annulus_minimizer
from .solver import solve_penalized
from .verification import results_csv, run_verification_suite

logger = logging.getLogger("penalized_fb")


def _common(sp: argparse.ArgumentParser, config_required: bool = False) -> None:
    sp.add_argument("--config", required=config_required, help="run configuration file")
    sp.add_argument("--out", help="output directory (overrides output_dir)")
    sp.add_argument("--seed", type=int, help="RNG seed (overrides seed)")
    sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key; repeatable")


def _load(args):
    overrides = list(args.set)
    if args.out is not None:
        overrides.append(f"output_dir={args.out}")
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return parse_config(args.config, overrides)


def _cmd_solve(args) -> int:
    cfg = _load(args)
    eps = args.epsilon if args.epsilon is not None else cfg.epsilon_list[0]
    prob = cfg.build(eps)
    sol = solve_penalized(prob.domain, prob.bdata, cfg.p, PenaltyParams(eps, prob.alpha), cfg.solver_config())
    report = analyze(sol)
    out = Path(cfg.output_dir) / run_dir_name(eps)
    persist_run(out, sol, report)
    print(EnergyBreakdown.CSV_HEADER + ",converged,lambda_mean,lambda_std")
    print(f"{sol.breakdown.csv_row()},{str(sol.converged).lower()},{report.lambda_mean!r},{report.lambda_std!r}")
    logger.info("wrote %s", out)
    return 0 if sol.converged else 1


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    rep = run_epsilon_sweep(cfg, persist=True, workers=args.workers)
    sys.stdout.write(rep.csv())
    logger.info("epsilon_attained=%s", rep.epsilon_attained)
    return 0


def _cmd_oracle1d(args) -> int:
    if args.scan:
        s, E = oracle_1d_scan(args.b, args.p, args.epsilon, args.alpha, args.samples)
        print("s,energy")
        for a, e in zip(s, E):
            print(f"{a!r},{e!r}")
        return 0
    res = oracle_1d_minimizer(args.b, args.p, args.epsilon, args.alpha, args.samples)
    print(Oracle1DResult.CSV_HEADER)
    print(res.csv_row())
    return 0


def _cmd_annulus(args) -> int:
    res = oracle_annulus_minimizer(args.delta, args.c0, args.p, args.dim, args.epsilon, args.samples)
    if args.scan:
        print("R,energy")
        for r, e in zip(res.R_grid, res.energies):
            print(f"{float(r)!r},{float(e)!r}")
        return 0
    print("R_star,energy,flux")
    print(f"{res.R_star!r},{res.energy!r},{res.profile.flux!r}")
    return 0


def _cmd_verify(args) -> int:
    solver, seed, checks = {}, 0, list(ALL_CHECKS)
    out_dir = None
    if args.config:
        cfg = _load(args)
        solver, seed, checks, out_dir = dict(cfg.solver), cfg.seed, list(cfg.checks), cfg.output_dir
    else:
        if args.set:
            raise ConfigError("--set needs --config", None, "--set")
        seed = args.seed if args.seed is not None else 0
        out_dir = args.out
    if args.checks is not None:
        checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    results = run_verification_suite(checks, solver=solver, seed=seed)
    text = results_csv(results)
    sys.stdout.write(text)
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "verify.csv").write_text(text)
    return 0 if all(r.status == "pass" for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="penalized-fb", description="Penalized volume-constrained free boundary solver")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="solve one epsilon and write its artifacts")
    _common(sp, config_required=True)
    sp.add_argument("--epsilon", type=float, help="defaults to the first entry of epsilon_list")
    sp.set_defaults(func=_cmd_solve)

    sp = sub.add_parser("sweep", help="run the epsilon sweep and write sweep.csv")
    _common(sp, config_required=True)
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=_cmd_sweep)

    sp = sub.add_parser("oracle1d", help="ramp-family minimizer on the unit interval")
    _common(sp)
    sp.add_argument("--b", type=float, default=1.0)
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.add_argument("--epsilon", type=float, required=True)
    sp.add_argument("--samples", type=int, default=2001)
    sp.add_argument("--scan", action="store_true", help="print the whole energy curve")
    sp.set_defaults(func=_cmd_oracle1d)

    sp = sub.add_parser("annulus-oracle", help="radial minimizer around a ball held at c0")
    _common(sp)
    sp.add_argument("--delta", type=float, default=1.0)
    sp.add_argument("--c0", type=float, default=1.0)
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--epsilon", type=float, required=True)
    sp.add_argument("--samples", type=int, default=4000)
    sp.add_argument("--scan", action="store_true", help="print the whole energy curve")
    sp.set_defaults(func=_cmd_annulus)

    sp = sub.add_parser("verify", help="run property checks and write verify.csv")
    _common(sp)
    sp.add_argument("--checks", help=f"comma separated subset of: {','.join(ALL_CHECKS)} (empty runs none)")
    sp.set_defaults(func=_cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
