#!/usr/bin/env python3
"""Cross-check the fixed-point estimator against the penalized oracle.

For each q, runs seeded random instances through both solvers and prints a
table of relative objective gaps and support agreement, in both noise
modes.

    python3 scripts/run_equivalence_table.py [--trials 20] [--seed 8]
"""

import argparse
import sys

from rqspice.equivalence import run_equivalence


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=16)
    parser.add_argument("--m", type=int, default=32)
    parser.add_argument("--qs", type=float, nargs="+", default=[1.5, 2.0, 3.0])
    parser.add_argument("--trials", type=int, default=20)
    parser.add_argument("--seed", type=int, default=8)
    args = parser.parse_args(argv)

    print(f"{'q':>5} {'mode':>16} {'worst gap':>12} {'supports':>9} {'passed':>7}")
    all_ok = True
    for q in args.qs:
        results = run_equivalence(args.n, args.m, q=q, trials=args.trials, seed=args.seed)
        for mode in ("uniform", "heteroscedastic"):
            batch = [r for r in results if r.noise_mode == mode]
            worst = max(r.relative_gap for r in batch)
            sup = sum(r.support_match for r in batch)
            n_pass = sum(r.passed for r in batch)
            all_ok &= n_pass == len(batch)
            print(
                f"{q:>5g} {mode:>16} {worst:>12.2e} {sup:>6d}/{len(batch)} "
                f"{n_pass:>4d}/{len(batch)}"
            )
    return 0 if all_ok else 1


if __name__ == "__main__":
    sys.exit(main())
