"""Command-line harness: simulate, scan, check, algebra, macro-test.

Exit codes: 0 success, 2 config validation failure, 3 flagged non-convergence
(suppressed by --allow-unconverged), 4 fit refusal.  The default output
directory comes from --out, then the config, then the AMPSIM_OUT environment
variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .born import measurement_series, setup_commutator
from .checks import run_property_suite, suite_passed, suite_text
from .config import RunConfig, load_config, with_overrides
from .dynamics import time_average
from .errors import ConfigError, ConvergenceError, FitRefusalError, SimulationError
from .manifest import RunWriter
from .observables import is_macroscopic, pointer_family
from .scaling import extrapolate_limit, fit_report_text, scan_n

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_UNCONVERGED = 3
EXIT_FIT_REFUSED = 4

TAIL_TOL = 0.01


def _out_dir(args, cfg: RunConfig) -> Path:
    return Path(args.out or cfg.directory or os.environ.get("AMPSIM_OUT") or "out")


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    return with_overrides(cfg, seeds=args.seeds)


def _parse_seed_list(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.split(",") if p.strip())


def cmd_simulate(args) -> int:
    cfg = _load(args)
    spec = cfg.model_spec()
    evo = cfg.evolution_config()
    times = np.arange(0.0, cfg.T + evo.dt / 2, evo.dt)
    series = measurement_series(spec, cfg.c0, cfg.c1, times, evo, cfg.theta)
    header = ["t", "pointer_expectation", "threshold_prob", "rho01_abs",
              "overlap_D", "norm_error"]
    rows = [(float(t),) + tuple(float(v) for v in series.values[i])
            for i, t in enumerate(series.times)]
    writer = RunWriter(_out_dir(args, cfg), cfg.canonical_text(), __version__,
                       cfg.seeds, "simulate")
    writer.stage_table("timeseries", header, rows, cfg.formats)
    writer.finalize()
    _, tail = time_average(series, "threshold_prob")
    print(f"simulate: n={spec.n} T={cfg.T:g} samples={len(rows)} -> {writer.out_dir}")
    if tail > TAIL_TOL and not args.allow_unconverged:
        print(f"simulate: time average unconverged (tail variation {tail:.3e} "
              f"> {TAIL_TOL:g}); rerun with longer T or --allow-unconverged",
              file=sys.stderr)
        return EXIT_UNCONVERGED
    return EXIT_OK


def cmd_scan(args) -> int:
    cfg = _load(args)
    if cfg.n_list is None:
        raise ConfigError("scan requires model.n_list", key="model.n_list")
    report = scan_n(cfg.model_template(), cfg.n_list, cfg.c0, cfg.c1, cfg.theta,
                    cfg.T, cfg.evolution_config(), cfg.seeds, threads=args.threads,
                    tail_tol=TAIL_TOL)
    extrapolation = None
    refusal = None
    try:
        extrapolation = extrapolate_limit(report)
    except FitRefusalError as exc:
        refusal = exc
    header = ["n", "seed", "time_avg_D", "p_hat", "abs_error", "mixture_distance",
              "tail_variation", "wall_time_s"]
    rows = [(r.n, r.seed, r.time_avg_D, r.p_hat, r.abs_error, r.mixture_distance,
             r.tail_variation, r.wall_time_s) for r in report.rows]
    writer = RunWriter(_out_dir(args, cfg), cfg.canonical_text(), __version__,
                       cfg.seeds, "scan")
    writer.stage_table("scan", header, rows, cfg.formats)
    writer.stage("fit_report.txt", fit_report_text(report, extrapolation, refusal))
    writer.finalize()
    print(f"scan: {len(report.rows)} rows ({len(report.flagged)} flagged) -> {writer.out_dir}")
    if report.fit is not None:
        rate, _, r2 = report.fit
        print(f"scan: decay rate {rate:.4f} per unit n, r^2 = {r2:.4f}")
    if report.flagged and not args.allow_unconverged:
        print("scan: some rows are unconverged; see fit_report.txt", file=sys.stderr)
        return EXIT_UNCONVERGED
    if refusal is not None:
        print(f"scan: {refusal}", file=sys.stderr)
        return EXIT_FIT_REFUSED
    if extrapolation is not None:
        print(f"scan: D_inf = {extrapolation.D_inf:g} +/- {extrapolation.D_uncertainty:.2e}, "
              f"p_inf = {extrapolation.p_inf:.4f} +/- {extrapolation.p_uncertainty:.2e}")
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = _load(args)
    spec = cfg.model_spec(cfg.n if cfg.n is not None else 8)
    results = run_property_suite(spec, cfg.evolution_config())
    text = suite_text(results)
    writer = RunWriter(_out_dir(args, cfg), cfg.canonical_text(), __version__,
                       cfg.seeds, "check")
    writer.stage("properties.txt", text)
    writer.stage("properties.json",
                 json.dumps([r.as_dict() for r in results], indent=2) + "\n")
    writer.finalize()
    print(text, end="")
    return EXIT_OK if suite_passed(results) else 1


def cmd_algebra(args) -> int:
    norm = setup_commutator(args.alpha, args.alpha_prime)
    verdict = "compatible" if norm <= 1e-12 else "incompatible"
    print(f"commutator norm |[P1({args.alpha:g}), P1({args.alpha_prime:g})]| = {norm!r}")
    print(f"setups are {verdict}")
    return EXIT_OK


def cmd_macro_test(args) -> int:
    cfg = _load(args)
    if cfg.n_list is None:
        raise ConfigError("macro-test requires model.n_list", key="model.n_list")
    template = cfg.model_template()
    verdict = is_macroscopic(
        pointer_family, cfg.n_list,
        lambda n: template.make(n, cfg.seeds[0]),
        k=args.k, trials=args.trials, horizon=args.horizon,
        cfg=cfg.evolution_config(), seed=cfg.seeds[0])
    writer = RunWriter(_out_dir(args, cfg), cfg.canonical_text(), __version__,
                       cfg.seeds, "macro-test")
    header, *rows = verdict.evidence_rows()
    writer.stage_table("substitution_evidence", header, rows, cfg.formats)
    writer.finalize()
    for n, dev, bound in verdict.per_n:
        print(f"macro-test: n={n} max deviation {dev:.4e} vs bound {bound:.4e}")
    print(f"macro-test: pointer family {'PASSES' if verdict.passed else 'FAILS'} "
          f"the substitution schedule")
    return EXIT_OK if verdict.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ampsim",
        description="Amplifier-as-detector simulator: exact closed-system dynamics, "
                    "pointer statistics, and scaling toward the classical limit.")
    parser.add_argument("--version", action="version", version=f"ampsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="run config path")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seeds", type=_parse_seed_list, default=None,
                       help="comma-separated seed list (overrides the config)")
        p.add_argument("--allow-unconverged", action="store_true",
                       help="exit 0 even when time averages are flagged unconverged")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for scans (deterministic output regardless)")

    p = sub.add_parser("simulate", help="single-n trajectory time series")
    add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("scan", help="scan over n with decay fit and extrapolation")
    add_common(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("check", help="run the property suite (n <= 12)")
    add_common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("algebra", help="commutator of two measurement setups")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--alpha-prime", type=float, required=True, dest="alpha_prime")
    p.set_defaults(func=cmd_algebra)

    p = sub.add_parser("macro-test", help="substitution-invariance test of the pointer family")
    add_common(p)
    p.add_argument("--k", type=int, default=1, help="number of substituted unit factors")
    p.add_argument("--trials", type=int, default=4)
    p.add_argument("--horizon", type=float, default=150.0,
                   help="time-average horizon per trajectory")
    p.set_defaults(func=cmd_macro_test)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_UNCONVERGED
    except FitRefusalError as exc:
        print(f"fit refusal: {exc}", file=sys.stderr)
        return EXIT_FIT_REFUSED
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
