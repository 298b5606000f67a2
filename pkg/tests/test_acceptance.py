"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line with its measured numbers.  Run with ``pytest -s`` to see
the report; the heavy support-recovery sweep is shared by the two trend
criteria and bounded at desk scale.
"""

import os
import time

import numpy as np
import pytest

import rqspice as rq
from rqspice import Component, Scenario, Signal, SpiceConfig
from rqspice.equivalence import gaussian_instance, run_equivalence, support_indices
from rqspice.harness import run_sweep
from tests.test_solver import reference_spice_amplitudes

EQUIV_SEED = 8
SWEEP_THREADS = min(os.cpu_count() or 1, 4)


def report(criterion: str, passed: bool, detail: str) -> None:
    print(f"[{criterion}] {'PASS' if passed else 'FAIL'}: {detail}", flush=True)
    assert passed, f"{criterion}: {detail}"


def test_criterion_01_mu_mapping():
    mu = rq.mu_from_q(2.0, 50)
    round_trip = rq.q_from_mu(mu, 50)
    ok = abs(mu - 0.38) <= 0.005 and abs(round_trip - 2.0) <= 1e-12
    report(
        "criterion 1: mu mapping",
        ok,
        f"mu(q=2, N=50) = {mu:.4f} (target 0.38 +- 0.005), inverse gives q = {round_trip:.12f}",
    )


def _equivalence_batch(noise_mode: str, budget_s: float, label: str):
    start = time.perf_counter()
    results = []
    for q in (1.5, 2.0, 3.0):
        results += run_equivalence(
            16, 32, q=q, trials=20, seed=EQUIV_SEED, noise_modes=(noise_mode,)
        )
    elapsed = time.perf_counter() - start
    worst_gap = max(res.relative_gap for res in results)
    support_ok = all(res.support_match for res in results)
    n_pass = sum(res.passed for res in results)
    ok = n_pass == len(results) and elapsed < budget_s
    report(
        label,
        ok,
        f"{n_pass}/{len(results)} trials, worst gap {worst_gap:.2e} (limit 1e-4), "
        f"supports identical: {support_ok}, {elapsed:.0f}s (budget {budget_s:.0f}s)",
    )


def test_criterion_02_equivalence_uniform():
    _equivalence_batch("uniform", 60.0, "criterion 2: uniform-noise equivalence")


def test_criterion_03_equivalence_heteroscedastic():
    _equivalence_batch(
        "heteroscedastic", 120.0, "criterion 3: heteroscedastic equivalence"
    )


def test_criterion_04_spice_reduction():
    worst = 0.0
    for trial in range(10):
        signal, dictionary, _ = gaussian_instance(
            16, 32, seed=314, trial=trial, snr_db=20.0
        )
        config = SpiceConfig(
            r=1.0, q=1.0, noise_mode="heteroscedastic",
            rel_tolerance=1e-9, max_iterations=30000, prune_threshold=0.0,
        )
        state, trace = rq.solve(signal, dictionary, config)
        x_solver = rq.amplitudes_from_powers(state, dictionary, signal)
        x_ref = reference_spice_amplitudes(signal.samples, dictionary.columns, tol=1e-9)
        worst = max(worst, float(np.abs(x_solver - x_ref).max() / np.abs(x_ref).max()))
    report(
        "criterion 4: q=1 reduction to the original estimator",
        worst <= 1e-6,
        f"worst amplitude deviation {worst:.2e} over 10 instances (limit 1e-6)",
    )


def test_criterion_05_scale_equivariance():
    worst = 0.0
    supports_ok = True
    for mode in ("uniform", "heteroscedastic"):
        signal, dictionary, _ = gaussian_instance(16, 32, seed=EQUIV_SEED, trial=0)
        config = SpiceConfig(q=2.0, noise_mode=mode, rel_tolerance=1e-9, max_iterations=50000)
        base_state, _ = rq.solve(signal, dictionary, config)
        base_x = rq.amplitudes_from_powers(base_state, dictionary, signal)
        for c in (1e-3, 1.0, 1e3):
            scaled = Signal(c * signal.samples)
            state, _ = rq.solve(scaled, dictionary, config)
            x = rq.amplitudes_from_powers(state, dictionary, scaled)
            worst = max(worst, float(np.abs(x - c * base_x).max() / (c * np.abs(base_x).max())))
            supports_ok &= bool(np.array_equal(state.p > 0, base_state.p > 0))
    report(
        "criterion 5: scale equivariance",
        worst <= 1e-6 and supports_ok,
        f"worst relative deviation {worst:.2e} over c in {{1e-3, 1, 1e3}}, "
        f"supports identical: {supports_ok}",
    )


def test_criterion_06_monotone_descent():
    worst_rise = -np.inf
    n_instances = 0
    for trial, q, mode in [
        (0, 1.0, "heteroscedastic"),
        (1, 1.5, "uniform"),
        (2, 2.0, "uniform"),
        (3, 2.0, "heteroscedastic"),
        (4, 3.0, "heteroscedastic"),
        (5, 9.0, "uniform"),
    ]:
        signal, dictionary, _ = gaussian_instance(16, 32, seed=EQUIV_SEED, trial=trial)
        _, trace = rq.solve(signal, dictionary, SpiceConfig(q=q, noise_mode=mode))
        obj = np.asarray(trace.objective)
        rises = (obj[1:] - obj[:-1]) / obj[:-1]
        worst_rise = max(worst_rise, float(rises.max()))
        n_instances += 1
    report(
        "criterion 6: monotone descent",
        worst_rise <= 1e-9,
        f"largest relative objective rise {worst_rise:.2e} over {n_instances} runs "
        "(slack 1e-9)",
    )


def test_criterion_07_woodbury_agreement():
    rng = np.random.default_rng(77)
    n, m = 50, 200
    cols = (rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))) / np.sqrt(2)
    dictionary = rq.Dictionary(columns=cols)
    y = Signal(rng.standard_normal(n) + 1j * rng.standard_normal(n))
    worst = 0.0
    for k in (1, 3, 5):
        p = np.zeros(m)
        p[rng.choice(m, size=k, replace=False)] = rng.uniform(0.5, 2.0, k)
        state = rq.SpiceState(p=p, sigma=rng.uniform(0.1, 1.0, n))
        fast = rq.covariance_inverse_action(state, dictionary, y)
        dense = np.linalg.solve(rq.form_covariance(state, dictionary), y.samples)
        worst = max(worst, float(np.abs(fast - dense).max() / np.abs(dense).max()))
    report(
        "criterion 7: low-rank inverse agreement",
        worst <= 1e-8,
        f"worst relative deviation {worst:.2e} for active sets of 1, 3, 5 (limit 1e-8)",
    )


@pytest.fixture(scope="module")
def support_recovery_rows():
    scenario = Scenario(
        n_samples=50,
        n_grid=1000,
        components=(Component(), Component(), Component()),
        min_separation=1.0 / 100.0,
        snr_db=(10.0,),
        trials=200,
        seed=2026,
        solver=tuple(
            SpiceConfig(q=q, noise_mode="uniform") for q in (1.0, 2.0, 9.0)
        ),
    )
    start = time.perf_counter()
    rows = run_sweep(scenario, threads=SWEEP_THREADS)
    elapsed = time.perf_counter() - start
    return {row.q: row for row in rows}, elapsed


def test_criterion_08_support_recovery_trend(support_recovery_rows):
    rows, elapsed = support_recovery_rows
    p1, p2, p9 = (rows[q].support_probability for q in (1.0, 2.0, 9.0))
    ok = (p2 - p1 >= 0.10) and (p2 > p9) and elapsed <= 20 * 60
    report(
        "criterion 8: support-recovery trend",
        ok,
        f"P(q=2) = {p2:.3f}, P(q=1) = {p1:.3f} (margin {p2 - p1:.3f} >= 0.10), "
        f"P(q=9) = {p9:.3f}; 200 trials per cell in {elapsed:.0f}s (budget 1200s)",
    )


def test_criterion_09_rmse_trend(support_recovery_rows):
    rows, _ = support_recovery_rows
    rmse1, rmse2 = rows[1.0].rmse, rows[2.0].rmse
    ok = np.isfinite(rmse1) and np.isfinite(rmse2) and rmse2 < rmse1
    report(
        "criterion 9: frequency-error trend",
        ok,
        f"mean RMSE q=2: {rmse2:.5f} vs q=1: {rmse1:.5f} at 10 dB "
        f"(exclusions {rows[2.0].excluded_trials} vs {rows[1.0].excluded_trials})",
    )


def test_criterion_10_performance_envelope():
    scenario = Scenario(
        n_samples=1000,
        n_grid=10000,
        components=(Component(), Component(), Component()),
        min_separation=1.0 / 2000.0,
        snr_db=(10.0,),
        trials=1,
        seed=0,
        solver=(SpiceConfig(q=5.0, noise_mode="uniform"),),
    )
    signal, _ = rq.synthesize(scenario, 0)
    dictionary = rq.build_sinusoid_dictionary(1000, 10000)
    config = SpiceConfig(q=5.0, noise_mode="uniform")
    start = time.perf_counter()
    state, trace = rq.solve(signal, dictionary, config)
    elapsed = time.perf_counter() - start
    report(
        "criterion 10: performance envelope",
        elapsed <= 60.0 and trace.converged,
        f"N=1000, M=10000, q=5 solved in {elapsed:.1f}s "
        f"({trace.n_iterations} iterations, {len(state.active_set)} active atoms; "
        "budget 60s)",
    )


def test_criterion_11_covfit_local_optimality():
    rng = np.random.default_rng(4242)
    worst_drop = 0.0
    for trial in range(3):
        signal, dictionary, _ = gaussian_instance(8, 16, seed=11, trial=trial, snr_db=20.0)
        config = SpiceConfig(
            r=1.0, q=1.0, noise_mode="heteroscedastic",
            rel_tolerance=1e-9, max_iterations=50000, prune_threshold=0.0,
        )
        state, trace = rq.solve(signal, dictionary, config)
        assert trace.converged
        base = rq.covfit_objective(state, dictionary, signal)
        for _ in range(100):
            fp = 1.0 + rng.uniform(-1e-3, 1e-3, state.p.size)
            fs = 1.0 + rng.uniform(-1e-3, 1e-3, state.sigma.size)
            perturbed = rq.SpiceState(p=state.p * fp, sigma=state.sigma * fs)
            value = rq.covfit_objective(perturbed, dictionary, signal)
            worst_drop = max(worst_drop, (base - value) / base)
    report(
        "criterion 11: covariance-fit local optimality",
        worst_drop <= 1e-8,
        f"largest relative decrease {worst_drop:.2e} over 300 perturbations "
        "(limit 1e-8)",
    )
