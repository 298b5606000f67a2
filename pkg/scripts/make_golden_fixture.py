#!/usr/bin/env python3
"""Regenerate the golden plot-data fixture used by the harness tests.

Run from the repository root:

    python3 scripts/make_golden_fixture.py

Review the diff before committing; the fixture freezes both the CSV schema
and the solver numerics on a tiny seeded sweep.
"""

import pathlib

from rqspice import Component, Scenario, SpiceConfig
from rqspice.harness import emit_plot_data, run_sweep


def main() -> None:
    scenario = Scenario(
        n_samples=12,
        n_grid=40,
        components=(Component(frequency=0.3, magnitude=1.0, phase="random"),),
        snr_db=(5.0, 15.0),
        trials=2,
        seed=7,
        solver=(
            SpiceConfig(q=1.0, noise_mode="uniform"),
            SpiceConfig(q=2.0, noise_mode="uniform"),
        ),
    )
    out_dir = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data"
    rows = run_sweep(scenario)
    for path in emit_plot_data(rows, out_dir):
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
