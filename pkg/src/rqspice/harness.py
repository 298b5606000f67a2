"""Seeded Monte-Carlo harness: signal synthesis, sweeps and aggregation.

Trials are driven by a counter-based generator (Philox) keyed on
(seed, trial_index), so every trial is reproducible in isolation and the
sweep is deterministic regardless of execution order or parallelism.  The
noise realization of a trial is shared across SNR levels (only its scale
changes), which keeps SNR curves smooth.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .model import (
    Dictionary,
    Signal,
    amplitudes_from_powers,
    build_sinusoid_dictionary,
)
from .solver import SpiceConfig, solve
from .spectrum import circular_distance, match_support, pick_peaks, rmse_frequencies

__all__ = [
    "Component",
    "Scenario",
    "ResultRow",
    "ScenarioError",
    "synthesize",
    "run_sweep",
    "summarize_rows",
    "emit_plot_data",
]

PEAK_THRESHOLD = 0.2
GRID_TOLERANCE = 2
MAX_FREQUENCY_DRAWS = 10_000


class ScenarioError(ValueError):
    """Invalid scenario description or impossible frequency draw."""


@dataclass(frozen=True)
class Component:
    """One sinusoid: fixed or per-trial random frequency, magnitude, phase.

    ``frequency=None`` draws a fresh frequency each trial, uniformly on
    (0, 1] subject to the scenario's minimum separation.  ``phase`` is
    either a fixed value in radians or the string "random" for a uniform
    draw on (0, 2*pi].
    """

    frequency: float | None = None
    magnitude: float = 1.0
    phase: float | str = "random"

    def __post_init__(self):
        if self.frequency is not None and not 0.0 < self.frequency <= 1.0:
            raise ScenarioError(f"frequency must lie in (0, 1], got {self.frequency}")
        if self.magnitude <= 0.0:
            raise ScenarioError("component magnitude must be positive")
        if isinstance(self.phase, str) and self.phase != "random":
            raise ScenarioError("phase must be a number or the string 'random'")


@dataclass(frozen=True)
class Scenario:
    """Monte-Carlo experiment description.

    ``snr_db`` may hold several SNR levels; ``solver`` holds the solver
    configurations to sweep.  ``trim`` drops that many of the largest
    per-trial frequency errors from the trimmed-RMSE column only.
    """

    n_samples: int
    n_grid: int
    components: tuple[Component, ...]
    min_separation: float = 0.0
    snr_db: tuple[float, ...] = (10.0,)
    trials: int = 1
    seed: int = 0
    solver: tuple[SpiceConfig, ...] = (SpiceConfig(),)
    trim: int = 0

    def __post_init__(self):
        if self.n_samples < 2 or self.n_grid < 1:
            raise ScenarioError("n_samples must be >= 2 and n_grid >= 1")
        if not self.components:
            raise ScenarioError("scenario needs at least one component")
        if self.trials < 1:
            raise ScenarioError("trials must be >= 1")
        if self.trim < 0:
            raise ScenarioError("trim must be >= 0")
        if self.min_separation < 0.0:
            raise ScenarioError("min_separation must be >= 0")
        fixed = [c.frequency for c in self.components if c.frequency is not None]
        for i in range(len(fixed)):
            for j in range(i + 1, len(fixed)):
                if circular_distance(fixed[i], fixed[j]) < self.min_separation:
                    raise ScenarioError("fixed component frequencies violate min_separation")
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "snr_db", tuple(float(s) for s in np.atleast_1d(self.snr_db)))
        object.__setattr__(self, "solver", tuple(self.solver))


@dataclass(frozen=True)
class ResultRow:
    """One aggregated sweep cell."""

    q: float
    r: float
    snr_db: float
    support_probability: float
    rmse: float
    rmse_trimmed: float
    excluded_trials: int
    mean_runtime: float

    FIELDS = (
        "q",
        "r",
        "snr_db",
        "support_probability",
        "rmse",
        "rmse_trimmed",
        "excluded_trials",
        "mean_runtime",
    )


def _trial_rng(scenario: Scenario, trial_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[scenario.seed, trial_index]))


def _draw_frequencies(scenario: Scenario, rng: np.random.Generator) -> np.ndarray:
    freqs = [c.frequency for c in scenario.components]
    missing = [i for i, f in enumerate(freqs) if f is None]
    for _ in range(MAX_FREQUENCY_DRAWS):
        trial = list(freqs)
        for i in missing:
            f = float(rng.uniform(0.0, 1.0))
            trial[i] = f if f > 0.0 else 1.0
        ok = all(
            circular_distance(trial[i], trial[j]) >= scenario.min_separation
            for i in range(len(trial))
            for j in range(i + 1, len(trial))
        )
        if ok:
            return np.asarray(trial, dtype=float)
    raise ScenarioError(
        f"could not draw separated frequencies in {MAX_FREQUENCY_DRAWS} attempts"
    )


def synthesize(
    scenario: Scenario, trial_index: int, snr_db: float | None = None
) -> tuple[Signal, np.ndarray]:
    """Noisy sinusoid mixture for one trial.

    y(n) = sum_j m_j exp(i (2 pi f_j n + phi_j)) plus circular complex white
    Gaussian noise whose per-sample variance is P_y 10^(-SNR/10) with
    P_y = ||y_clean||^2 / N.  Deterministic given (seed, trial_index); the
    default SNR is the scenario's first level.
    """
    if snr_db is None:
        snr_db = scenario.snr_db[0]
    rng = _trial_rng(scenario, trial_index)
    freqs = _draw_frequencies(scenario, rng)
    n = np.arange(scenario.n_samples)
    clean = np.zeros(scenario.n_samples, dtype=np.complex128)
    for comp, f in zip(scenario.components, freqs):
        phase = rng.uniform(0.0, 2.0 * np.pi) if comp.phase == "random" else float(comp.phase)
        clean += comp.magnitude * np.exp(1j * (2.0 * np.pi * f * n + phase))
    unit_noise = (rng.standard_normal(scenario.n_samples)
                  + 1j * rng.standard_normal(scenario.n_samples)) / np.sqrt(2.0)
    power = float(np.vdot(clean, clean).real) / scenario.n_samples
    noise_var = power * 10.0 ** (-snr_db / 10.0)
    return Signal(clean + np.sqrt(noise_var) * unit_noise), freqs


@dataclass(frozen=True)
class _TrialOutcome:
    matched: bool
    rmse: float | None
    runtime: float


def _run_trial(
    scenario: Scenario,
    config: SpiceConfig,
    snr_db: float,
    trial_index: int,
    dictionary: Dictionary | None = None,
) -> _TrialOutcome:
    if dictionary is None:
        dictionary = build_sinusoid_dictionary(scenario.n_samples, scenario.n_grid)
    signal, true_freqs = synthesize(scenario, trial_index, snr_db)
    start = time.perf_counter()
    state, trace = solve(signal, dictionary, config)
    runtime = time.perf_counter() - start
    if not trace.converged:
        return _TrialOutcome(matched=False, rmse=None, runtime=runtime)
    x_hat = amplitudes_from_powers(state, dictionary, signal)
    estimate = pick_peaks(x_hat, PEAK_THRESHOLD, dictionary.grid_frequencies)
    matched = match_support(
        estimate, true_freqs, GRID_TOLERANCE, grid_spacing=1.0 / scenario.n_grid
    )
    return _TrialOutcome(
        matched=matched,
        rmse=rmse_frequencies(estimate, true_freqs),
        runtime=runtime,
    )


def _aggregate(
    scenario: Scenario, config: SpiceConfig, snr_db: float, outcomes: list[_TrialOutcome]
) -> ResultRow:
    errors = [o.rmse for o in outcomes if o.rmse is not None]
    excluded = scenario.trials - len(errors)
    trimmed = sorted(errors)[: max(len(errors) - scenario.trim, 0)] if errors else []
    return ResultRow(
        q=config.q,
        r=config.r,
        snr_db=snr_db,
        support_probability=sum(o.matched for o in outcomes) / scenario.trials,
        rmse=float(np.mean(errors)) if errors else float("nan"),
        rmse_trimmed=float(np.mean(trimmed)) if trimmed else float("nan"),
        excluded_trials=excluded,
        mean_runtime=float(np.mean([o.runtime for o in outcomes])),
    )


def run_sweep(scenario: Scenario, threads: int = 1) -> list[ResultRow]:
    """Run every (config, SNR) cell of the scenario.

    Trials within a cell run independently (in processes when threads > 1);
    aggregation is a deterministic by-index reduction, so the result does
    not depend on completion order.  A non-converged solve counts as a
    failed support match and an excluded RMSE trial rather than an error.
    """
    dictionary = build_sinusoid_dictionary(scenario.n_samples, scenario.n_grid)
    rows = []
    for config in scenario.solver:
        for snr_db in scenario.snr_db:
            if threads > 1:
                args = [(scenario, config, snr_db, t) for t in range(scenario.trials)]
                with ProcessPoolExecutor(max_workers=threads) as pool:
                    outcomes = list(pool.map(_run_trial_star, args))
            else:
                outcomes = [
                    _run_trial(scenario, config, snr_db, t, dictionary)
                    for t in range(scenario.trials)
                ]
            rows.append(_aggregate(scenario, config, snr_db, outcomes))
    return rows


def _run_trial_star(args) -> _TrialOutcome:
    return _run_trial(*args)


def summarize_rows(rows: list[ResultRow]) -> str:
    """Human-readable sweep summary with a soft SNR-monotonicity check."""
    lines = []
    by_config: dict[tuple[float, float], list[ResultRow]] = {}
    for row in rows:
        by_config.setdefault((row.q, row.r), []).append(row)
    for (q, r), group in sorted(by_config.items()):
        group = sorted(group, key=lambda row: row.snr_db)
        probs = [row.support_probability for row in group]
        monotone = all(b >= a for a, b in zip(probs, probs[1:]))
        lines.append(f"q={q:g} r={r:g}: support probability {probs}")
        if not monotone:
            lines.append(
                f"  note: support probability not monotone in SNR for q={q:g}, r={r:g}"
                " (sampling noise or genuine regression)"
            )
    return "\n".join(lines)


def _curve_filename(metric: str, q: float, r: float) -> str:
    return f"{metric}_vs_snr_q{q:g}_r{r:g}.csv"


def emit_plot_data(rows: list[ResultRow], out_dir) -> list[str]:
    """One CSV per curve family: probability vs SNR and RMSE vs SNR per (q, r).

    Probability files carry (snr_db, support_probability); RMSE files carry
    (snr_db, rmse, rmse_trimmed, excluded_trials).  Returns the written
    paths.  An empty row list is an error and writes nothing.
    """
    import os

    from .io import atomic_write_text, format_float

    if not rows:
        raise ValueError("no result rows to emit")
    os.makedirs(out_dir, exist_ok=True)
    by_config: dict[tuple[float, float], list[ResultRow]] = {}
    for row in rows:
        by_config.setdefault((row.q, row.r), []).append(row)
    written = []
    for (q, r), group in sorted(by_config.items()):
        group = sorted(group, key=lambda row: row.snr_db)
        prob_lines = ["snr_db,support_probability"]
        rmse_lines = ["snr_db,rmse,rmse_trimmed,excluded_trials"]
        for row in group:
            prob_lines.append(
                f"{format_float(row.snr_db)},{format_float(row.support_probability)}"
            )
            rmse_lines.append(
                f"{format_float(row.snr_db)},{format_float(row.rmse)},"
                f"{format_float(row.rmse_trimmed)},{row.excluded_trials}"
            )
        for metric, lines in (("probability", prob_lines), ("rmse", rmse_lines)):
            path = os.path.join(out_dir, _curve_filename(metric, q, r))
            atomic_write_text(path, "\n".join(lines) + "\n")
            written.append(path)
    return written
