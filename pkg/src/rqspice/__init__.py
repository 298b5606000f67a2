"""Sparse covariance fitting for line spectra with mixed-norm penalties."""

from .model import (
    Dictionary,
    Signal,
    SpiceState,
    Weights,
    amplitudes_from_powers,
    build_sinusoid_dictionary,
    compute_weights,
    form_covariance,
)
from .solver import (
    BetaVector,
    SolverTrace,
    SpiceConfig,
    StalledIterationError,
    compute_beta,
    covariance_inverse_action,
    initialize,
    mu_from_q,
    normalize_state,
    objective,
    penalty_value,
    q_from_mu,
    solve,
    update_lambda,
    update_noise,
    update_powers,
)
from .oracle import (
    PenalizedProblem,
    covfit_objective,
    heteroscedastic_problem,
    lattice_minimize,
    noise_from_residual,
    penalized_objective,
    powers_from_amplitudes,
    solve_penalized,
    uniform_noise_problem,
)
from .spectrum import (
    Peak,
    SpectralEstimate,
    circular_distance,
    match_support,
    pick_peaks,
    refit_amplitudes,
    rmse_frequencies,
)
from .harness import (
    Component,
    ResultRow,
    Scenario,
    ScenarioError,
    emit_plot_data,
    run_sweep,
    summarize_rows,
    synthesize,
)
from .equivalence import (
    EquivalenceResult,
    equivalence_trial,
    gaussian_instance,
    run_equivalence,
    support_indices,
)

__version__ = "0.1.0"

__all__ = [
    "Signal",
    "Dictionary",
    "Weights",
    "SpiceState",
    "build_sinusoid_dictionary",
    "compute_weights",
    "form_covariance",
    "amplitudes_from_powers",
    "SpiceConfig",
    "BetaVector",
    "SolverTrace",
    "StalledIterationError",
    "initialize",
    "compute_beta",
    "update_lambda",
    "update_powers",
    "update_noise",
    "covariance_inverse_action",
    "objective",
    "penalty_value",
    "normalize_state",
    "solve",
    "q_from_mu",
    "mu_from_q",
    "PenalizedProblem",
    "uniform_noise_problem",
    "heteroscedastic_problem",
    "solve_penalized",
    "penalized_objective",
    "powers_from_amplitudes",
    "noise_from_residual",
    "covfit_objective",
    "lattice_minimize",
    "Peak",
    "SpectralEstimate",
    "circular_distance",
    "pick_peaks",
    "match_support",
    "rmse_frequencies",
    "refit_amplitudes",
    "Component",
    "Scenario",
    "ResultRow",
    "ScenarioError",
    "synthesize",
    "run_sweep",
    "summarize_rows",
    "emit_plot_data",
    "EquivalenceResult",
    "gaussian_instance",
    "support_indices",
    "equivalence_trial",
    "run_equivalence",
]
