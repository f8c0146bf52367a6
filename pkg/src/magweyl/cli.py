#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Command-line interface for magweyl.
"""

import argparse
import csv
import logging
import os
import sys

from . import __version__
from .config import RunConfig, load_config
from .errors import ConvergenceError, GuardViolation, MagWeylError, ValidationError, exit_code_for
from .oracle import DESK_SCALE_MAX_N

DEFAULT_OUT = "results"
EPILOG = f"""
Examples:
  magweyl predict --config landau.yaml            # Weyl integral + saddle corrections
  magweyl oracle --config landau.yaml --grid 64   # dense eigensolve of the discretized operator
  magweyl run --config saddle.yaml --out results  # prediction vs oracle, stored as JSON + CSV
  magweyl sweep --config sweep_h.yaml --workers 4 # remainder scaling fit over sweep.points
  magweyl critpoints --config saddle.yaml         # critical points of V/F
  magweyl model1d --w 1e-4 1e-3 1e-2 1e-1         # saddle model log-coefficient sweep
  magweyl report --out results                    # summary.csv + one SVG per sweep

The dense oracle is capped at N <= {DESK_SCALE_MAX_N} unknowns (about 67 interior nodes per axis).
Exit codes: 0 success, 2 validation error, 3 numerical guard violation.
"""


def _add_common(parser: argparse.ArgumentParser, config_required: bool = True):
    parser.add_argument("--config", "-c", required=config_required, help="YAML run configuration")
    parser.add_argument("--out", "-o", default=None, help="Results directory")
    parser.add_argument("--grid", "-g", type=int, default=None, help="Interior nodes per axis (overrides grid.n)")
    parser.add_argument("--workers", "-w", type=int, default=1, help="Worker threads (default: %(default)s)")
    parser.add_argument("--seed", type=int, default=None, help="Seed for the random perturbation of V")
    parser.add_argument("--timings", action="store_true", help="Fill the seconds column of CSV output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="magweyl",
        description="magweyl: magnetic Weyl asymptotics with saddle-point corrections, checked against a discretized-operator oracle",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=EPILOG,
    )
    parser.add_argument("--version", action="version", version=f"magweyl {__version__}")
    parser.add_argument("--verbose", "-v", action="count", default=0, help="More log output (-vv for debug)")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("predict", "Asymptotic prediction for one (mu, h)"),
        ("oracle", "Eigensolve the discretized operator"),
        ("run", "Prediction vs oracle for one (mu, h)"),
        ("sweep", "Run sweep.points and fit the remainder law"),
        ("critpoints", "List the critical points of V/F"),
    ):
        _add_common(sub.add_parser(name, help=help_text))

    m1 = sub.add_parser("model1d", help="Saddle model log-coefficient sweep")
    m1.add_argument("--w", type=float, nargs="+", default=[1e-4, 1e-3, 1e-2, 1e-1], help="Level offsets w")
    m1.add_argument("--rho", type=float, default=2.0, help="Diamond radius (default: %(default)s)")
    m1.add_argument("--hbar", type=float, default=0.01, help="Effective Planck parameter (default: %(default)s)")
    m1.add_argument("--mu", type=float, default=100.0, help="Coupling mu (default: %(default)s)")
    m1.add_argument("--k", type=float, default=1.0, help="|det Hess(V/F)|^1/2 (default: %(default)s)")
    m1.add_argument("--omega1", type=float, default=0.1, help="omega_1 at the saddle (default: %(default)s)")
    m1.add_argument("--model", choices=("saddle", "extremum"), default="saddle")
    m1.add_argument("--csv", default=None, help="Write the sweep rows to this CSV file")
    m1.add_argument("--workers", "-w", type=int, default=1)

    rp = sub.add_parser("report", help="Summary CSV and sweep plots for a results directory")
    rp.add_argument("--out", "-o", default=DEFAULT_OUT, help="Results directory (default: %(default)s)")
    rp.add_argument("--timings", action="store_true", help="Fill the seconds column")
    return parser


def _load(args) -> RunConfig:
    if not os.path.isfile(args.config):
        raise ValidationError(f"Config file '{args.config}' not found (cwd: {os.getcwd()}).")
    cfg = load_config(args.config)
    if args.grid is not None:
        cfg = cfg.with_grid(args.grid)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers <= 0:
        raise ValidationError(f"Number of workers must be positive, got {args.workers}.")
    return cfg


def _cmd_predict(args):
    from .asymptote import predict
    from .critpoints import find_critical_points
    from .scenarios import build_scenario, scenario_grid

    cfg = _load(args)
    grid = scenario_grid(cfg.grid.n, cfg.grid.half_width)
    scenario = build_scenario(cfg.scenario, grid, cfg.regime.mu, cfg.regime.h, cfg.constants, cfg.seed)
    c = cfg.constants
    points = find_critical_points(
        scenario.coeffs, c.search_radius, c.newton_tol, c.nondeg_tol, c.dedup_radius, c.max_iter, args.workers
    )
    prediction = predict(scenario.coeffs, scenario.psi, cfg.regime_params(), points)
    print(f"Scenario: {scenario.name}  mu={cfg.regime.mu:g}  h={cfg.regime.h:g}")
    print(f"Regime:          {prediction.regime.value}")
    print(f"Weyl integral:   {prediction.weyl_integral:.10g}")
    print(f"corr sum:        {prediction.corr_sum:.10g}")
    print(f"corr2 sum:       {prediction.corr2_sum:.10g}")
    if prediction.varsigma_term:
        print(f"varsigma term:   {prediction.varsigma_term:.10g}")
    print(f"Total:           {prediction.total:.10g}")
    for sc in prediction.saddle_corrections:
        x, y = sc.point.location
        print(f"  saddle ({x:.6g}, {y:.6g}): sigma={sc.sigma:.6g} corr={sc.corr_term:.6g} psi={sc.psi_value:.6g} {' '.join(sc.flags)}")


def _cmd_oracle(args):
    from .oracle import assemble, eigensolve, save_eigenvalues, spectral_count
    from .runner import ResultsStore, cached_eigenvalues, eigenvalue_cache_key
    from .scenarios import build_scenario, scenario_grid

    cfg = _load(args)
    values = cached_eigenvalues(cfg, args.out) if args.out else None
    if values is None:
        grid = scenario_grid(cfg.grid.n, cfg.grid.half_width)
        scenario = build_scenario(cfg.scenario, grid, cfg.regime.mu, cfg.regime.h, cfg.constants, cfg.seed)
        op = assemble(scenario.coeffs, grid, cfg.regime.mu, cfg.regime.h)
        print(f"Assembled {op!r}")
        sd = eigensolve(op)
        values = sd.eigenvalues
        print(f"N_exact (tau=0): {spectral_count(sd, scenario.psi, 0.0):.10g}")
        if args.out:
            save_eigenvalues(ResultsStore(args.out).cache_path(eigenvalue_cache_key(cfg)), values)
    else:
        print("Eigenvalues loaded from cache")
    print(f"N = {len(values)}, eigenvalues <= 0: {int((values <= 0).sum())}")
    print("Lowest eigenvalues: " + ", ".join(f"{v:.6g}" for v in values[:8]))


def _cmd_run(args):
    from .report import format_table
    from .runner import run_scenario

    cfg = _load(args)
    out = args.out or DEFAULT_OUT
    print(f"Running '{cfg.scenario.name}' at mu={cfg.regime.mu:g}, h={cfg.regime.h:g}, grid {cfg.grid.n}")
    report = run_scenario(cfg, out, args.workers, timings=args.timings)
    print(format_table([report]))
    print(f"Stored run {report.run_id[:12]} in {out}")


def _cmd_sweep(args):
    from .report import format_table
    from .runner import sweep_and_fit

    cfg = _load(args)
    out = args.out or DEFAULT_OUT
    print(f"Sweeping {cfg.sweep.axis} over {len(cfg.sweep.points)} point(s) with {args.workers} worker(s)")
    summary = sweep_and_fit(cfg, out_dir=out, workers=args.workers, timings=args.timings)
    print(format_table(summary.reports))
    for key, value in sorted(summary.fits.items()):
        print(f"{key}: {value}")
    if summary.discretization_limited:
        print("discretization-limited points: " + ", ".join(f"{p:g}" for p in summary.discretization_limited))
    if summary.discretization_unchecked:
        print("coarse re-solve refused at: " + ", ".join(f"{p:g}" for p in summary.discretization_unchecked))


def _cmd_critpoints(args):
    from .critpoints import find_critical_points
    from .scenarios import build_scenario, scenario_grid

    cfg = _load(args)
    grid = scenario_grid(cfg.grid.n, cfg.grid.half_width)
    scenario = build_scenario(cfg.scenario, grid, cfg.regime.mu, cfg.regime.h, cfg.constants, cfg.seed)
    c = cfg.constants
    points = find_critical_points(
        scenario.coeffs, c.search_radius, c.newton_tol, c.nondeg_tol, c.dedup_radius, c.max_iter, args.workers
    )
    if not points:
        print("No critical points of V/F in the search disc.")
    for cp in points:
        print(f"{cp!r}  det={cp.det_hessian:.6g}  V/F={cp.vf_value:.6g}  omega1={cp.omega1_value:.6g}")


def _cmd_model1d(args):
    from .model1d import fit_log_signature, log_signature_deltas, saddle_sweep

    rows = saddle_sweep(args.w, args.k, args.omega1, args.mu, args.hbar, args.rho, args.model, args.workers)
    header = ("w", "count_unperturbed", "count_perturbed", "measured_coeff", "predicted_coeff", "branch_factor")
    print("  ".join(header))
    for row in rows:
        print("  ".join(f"{v:.6g}" for v in row))
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows([[format(v, ".12g") for v in row] for row in rows])
        print(f"CSV written to: {args.csv}")
    positive = sorted(w for w in args.w if w > 0)
    if args.model == "saddle" and len(positive) >= 3:
        c1, c2, residual = fit_log_signature(positive, log_signature_deltas(positive, args.hbar, args.rho))
        print(f"log-signature fit: c1={c1:.6g} c2={c2:.6g} residual={residual:.3%}")


def _cmd_report(args):
    from .report import emit_report

    for path in emit_report(args.out, timings=args.timings):
        print(f"Wrote {path}")


COMMANDS = {
    "predict": _cmd_predict,
    "oracle": _cmd_oracle,
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "critpoints": _cmd_critpoints,
    "model1d": _cmd_model1d,
    "report": _cmd_report,
}


def _hint(exc: MagWeylError) -> str:
    if isinstance(exc, ConvergenceError):
        return "The eigensolver failed; check the coefficients for NaN or rerun on a different grid."
    if isinstance(exc, GuardViolation):
        return "Raise grid.n (or --grid) to the size named above, or lower mu/h; N must stay <= %d." % DESK_SCALE_MAX_N
    return (
        "Config sections are scenario, regime, grid, sweep, constants; "
        "scenarios without level_shift need V >= epsilon0 and F >= epsilon0 on the whole grid."
    )


def main(argv=None):
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        COMMANDS[args.command](args)
    except MagWeylError as e:
        print(f"Error: {e}", file=sys.stderr)
        print(f"Hint: {_hint(e)}", file=sys.stderr)
        sys.exit(exit_code_for(e))
    except OSError as e:
        print(f"Operating System Error: {e}", file=sys.stderr)
        sys.exit(1)
    except KeyboardInterrupt:
        print("\nInterrupted by the user.")
        sys.exit(1)


if __name__ == "__main__":
    main()
