"""Command-line interface: solve, simulate, check-equivalence, bench.

Exit codes: 0 success, 2 validation failure, 3 non-convergence in solve
mode.  All outputs are written atomically.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import __version__
from .equivalence import run_equivalence
from .harness import Component, Scenario, run_sweep, summarize_rows, emit_plot_data
from .io import (
    atomic_write_text,
    format_float,
    load_dictionary_csv,
    load_scenario_json,
    load_signal_csv,
    write_estimate_csv,
    write_results_csv,
    write_trace_csv,
)
from .model import amplitudes_from_powers, build_sinusoid_dictionary
from .harness import synthesize
from .solver import SpiceConfig, solve

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NOT_CONVERGED = 3


def _solver_config(args) -> SpiceConfig:
    return SpiceConfig(
        r=args.r,
        q=args.q,
        noise_mode=args.noise_mode,
        rel_tolerance=args.tol,
        max_iterations=args.max_iter,
        prune_threshold=args.prune_threshold,
    )


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--r", type=float, default=1.0, help="power norm order (>= 1)")
    parser.add_argument("--q", type=float, default=2.0, help="noise norm order (>= 1)")
    parser.add_argument(
        "--noise-mode",
        choices=("heteroscedastic", "uniform"),
        default="uniform",
    )
    parser.add_argument("--tol", type=float, default=1e-6, help="relative tolerance in [1e-9, 1e-3]")
    parser.add_argument("--max-iter", type=int, default=5000)
    parser.add_argument("--prune-threshold", type=float, default=1e-12)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rq-spice",
        description="Sparse covariance fitting for line spectra with mixed-norm penalties",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"rq-spice {__version__} (scenario schema 1, estimate/trace csv schema 1)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run the estimator on one scenario or signal file")
    p_solve.add_argument("--input", help="scenario JSON describing the signal")
    p_solve.add_argument("--signal-csv", help="signal CSV (real,imag) instead of a scenario")
    p_solve.add_argument("--dictionary-csv", help="dictionary CSV; default is the sinusoid grid")
    p_solve.add_argument("--m", type=int, default=1000, help="grid size when building the sinusoid dictionary for a CSV signal")
    _add_solver_flags(p_solve)
    p_solve.add_argument("--out", required=True, help="estimate CSV path")
    p_solve.add_argument("--trace", help="optional iteration trace CSV path")

    p_sim = sub.add_parser("simulate", help="run a Monte-Carlo sweep from a scenario JSON")
    p_sim.add_argument("--scenario", required=True)
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    p_eq = sub.add_parser("check-equivalence", help="fixed-point vs penalized-regression cross-check")
    p_eq.add_argument("--n", type=int, default=16)
    p_eq.add_argument("--m", type=int, default=32)
    p_eq.add_argument("--q", type=float, default=2.0)
    p_eq.add_argument("--r", type=float, default=1.0)
    p_eq.add_argument("--trials", type=int, default=20)
    p_eq.add_argument("--seed", type=int, default=7)
    p_eq.add_argument(
        "--noise-mode",
        choices=("heteroscedastic", "uniform", "both"),
        default="both",
    )
    p_eq.add_argument("--out", help="write the pass/fail table to this CSV instead of stdout")

    p_bench = sub.add_parser("bench", help="single large instance wall-time benchmark")
    p_bench.add_argument("--n", type=int, default=1000)
    p_bench.add_argument("--m", type=int, default=10000)
    p_bench.add_argument("--k", type=int, default=3, help="number of sinusoids")
    p_bench.add_argument("--snr", type=float, default=10.0)
    p_bench.add_argument("--seed", type=int, default=0)
    _add_solver_flags(p_bench)
    return parser


def _fail(message: str) -> int:
    print(f"rq-spice: error: {message}", file=sys.stderr)
    return EXIT_VALIDATION


def _cmd_solve(args) -> int:
    try:
        config = _solver_config(args)
    except ValueError as err:
        return _fail(str(err))
    try:
        if args.signal_csv:
            signal = load_signal_csv(args.signal_csv)
            if args.dictionary_csv:
                dictionary = load_dictionary_csv(args.dictionary_csv)
            else:
                dictionary = build_sinusoid_dictionary(signal.n_samples, args.m)
        elif args.input:
            scenario = load_scenario_json(args.input)
            signal, _ = synthesize(scenario, trial_index=0)
            dictionary = build_sinusoid_dictionary(scenario.n_samples, scenario.n_grid)
        else:
            return _fail("solve needs --input or --signal-csv")
    except (OSError, ValueError, KeyError) as err:
        return _fail(f"cannot load inputs: {err}")

    state, trace = solve(signal, dictionary, config)
    x_hat = amplitudes_from_powers(state, dictionary, signal)
    write_estimate_csv(args.out, state, x_hat, dictionary.grid_frequencies)
    if args.trace:
        write_trace_csv(args.trace, trace)
    if not trace.converged:
        print(
            f"did not converge within {config.max_iterations} iterations",
            file=sys.stderr,
        )
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _cmd_simulate(args) -> int:
    try:
        scenario = load_scenario_json(args.scenario)
    except (OSError, ValueError, KeyError) as err:
        return _fail(f"cannot load scenario: {err}")
    rows = run_sweep(scenario, threads=max(args.threads, 1))
    os.makedirs(args.out, exist_ok=True)
    write_results_csv(os.path.join(args.out, "results.csv"), rows)
    emit_plot_data(rows, args.out)
    summary = summarize_rows(rows)
    atomic_write_text(os.path.join(args.out, "summary.txt"), summary + "\n")
    print(summary)
    return EXIT_OK


def _cmd_check_equivalence(args) -> int:
    if args.trials < 1:
        return _fail("trials must be >= 1")
    if args.q < 1.0 or args.r < 1.0:
        return _fail("norm orders must satisfy r >= 1 and q >= 1")
    modes = (
        ("uniform", "heteroscedastic") if args.noise_mode == "both" else (args.noise_mode,)
    )
    results = run_equivalence(
        args.n, args.m, q=args.q, r=args.r, trials=args.trials, seed=args.seed,
        noise_modes=modes,
    )
    lines = ["trial,noise_mode,q,r,relative_gap,support_match,pass"]
    for res in results:
        lines.append(
            f"{res.trial},{res.noise_mode},{res.q:g},{res.r:g},"
            f"{format_float(res.relative_gap)},{res.support_match},{res.passed}"
        )
    table = "\n".join(lines) + "\n"
    if args.out:
        atomic_write_text(args.out, table)
    else:
        sys.stdout.write(table)
    n_pass = sum(res.passed for res in results)
    print(f"{n_pass}/{len(results)} trials passed", file=sys.stderr)
    return EXIT_OK if n_pass == len(results) else 1


def _cmd_bench(args) -> int:
    try:
        config = _solver_config(args)
    except ValueError as err:
        return _fail(str(err))
    if args.k < 1 or args.k > args.m:
        return _fail("k must lie in [1, m]")
    scenario = Scenario(
        n_samples=args.n,
        n_grid=args.m,
        components=tuple(Component() for _ in range(args.k)),
        min_separation=1.0 / (2.0 * args.n),
        snr_db=(args.snr,),
        trials=1,
        seed=args.seed,
        solver=(config,),
    )
    signal, _ = synthesize(scenario, trial_index=0)
    dictionary = build_sinusoid_dictionary(args.n, args.m)
    start = time.perf_counter()
    state, trace = solve(signal, dictionary, config)
    elapsed = time.perf_counter() - start
    print(
        f"n={args.n} m={args.m} q={args.q:g} r={args.r:g} k={args.k}: "
        f"{elapsed:.2f}s wall, {trace.n_iterations} iterations, "
        f"{int(np.count_nonzero(state.p > 0))} active atoms, converged={trace.converged}"
    )
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "check-equivalence":
            return _cmd_check_equivalence(args)
        if args.command == "bench":
            return _cmd_bench(args)
    except ValueError as err:
        return _fail(str(err))
    return _fail(f"unknown command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
