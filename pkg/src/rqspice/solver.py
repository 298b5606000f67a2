"""Fixed-point estimator for the mixed-norm covariance-fit criterion.

Minimizes, over nonnegative powers ``p`` and noise parameters ``sigma``,

    y* R(p, sigma)^{-1} y + ||W p||_r + ||W_s sigma||_q

where ``W`` and ``W_s`` are the diagonal penalty weights.  The efficient
fixed-point path implemented here covers r = 1 (the sparsity-inducing case);
general ``r`` is served by the independent penalized-regression solver in
:mod:`rqspice.oracle`.

The iteration reparametrizes the quadratic form through beta = P A* R^{-1} y,
updates (lambda, p, sigma) in closed form from the stationarity conditions,
and renormalizes each iterate onto the constraint surface

    sum_k w_k p_k + (sum_k w_{M+k}^q sigma_k^q)^{1/q} = 1.

Scale handling: the input is normalized to unit Euclidean norm internally
(every noise weight is then exactly 1), and the final state is rescaled to
the minimizer of the unconstrained objective.  Estimates are therefore
exactly scale equivariant: scaling the data by c scales the returned
amplitudes by c and the state by c^2, with an identical support.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .model import (
    Dictionary,
    Signal,
    SpiceState,
    Weights,
    compute_weights,
    form_covariance,
    _toeplitz_first_column,
)

__all__ = [
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
]

NOISE_MODES = ("heteroscedastic", "uniform")

# relative floor keeping diag(sigma) invertible when the noise block collapses
SIGMA_FLOOR_FRACTION = 1e-12

# absolute underflow guard on the constraint-normalized iterate: powers this
# far below the O(1) penalty scale are pure floating-point residue and would
# overflow 1/p in the low-rank inverse
UNDERFLOW_PRUNE = 1e-250


class StalledIterationError(RuntimeError):
    """Raised when a closed-form update receives a nonpositive dual value."""


@dataclass(frozen=True)
class SpiceConfig:
    """Solver configuration.

    ``r`` is the norm on the atom powers (the fixed-point path needs r = 1),
    ``q`` the norm on the noise parameters.  ``rel_tolerance`` bounds the
    largest relative change in (p, sigma) between consecutive iterates and
    must lie in [1e-9, 1e-3].
    """

    r: float = 1.0
    q: float = 2.0
    noise_mode: str = "uniform"
    rel_tolerance: float = 1e-6
    max_iterations: int = 5000
    prune_threshold: float = 1e-12

    def __post_init__(self):
        if self.r < 1.0:
            raise ValueError(f"r must be >= 1, got {self.r}")
        if self.q < 1.0:
            raise ValueError(f"q must be >= 1, got {self.q}")
        if self.noise_mode not in NOISE_MODES:
            raise ValueError(f"noise_mode must be one of {NOISE_MODES}")
        if not 1e-9 <= self.rel_tolerance <= 1e-3:
            raise ValueError("rel_tolerance must lie in [1e-9, 1e-3]")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.prune_threshold < 0.0:
            raise ValueError("prune_threshold must be nonnegative")


@dataclass(frozen=True)
class BetaVector:
    """Reparametrized iterate beta = P A* R^{-1} y, split into its blocks."""

    beta_signal: np.ndarray
    beta_noise: np.ndarray

    def __post_init__(self):
        bs = np.asarray(self.beta_signal, dtype=np.complex128)
        bn = np.asarray(self.beta_noise, dtype=np.complex128)
        object.__setattr__(self, "beta_signal", bs)
        object.__setattr__(self, "beta_noise", bn)


@dataclass
class SolverTrace:
    """Per-iteration diagnostics.

    Row i describes the i-th iterate (row 0 is the initialization):
    objective value, dual value lambda, active-set size, largest relative
    change from the previous iterate (nan for row 0), and the raw constraint
    value of the iterate before renormalization.
    """

    objective: list[float] = field(default_factory=list)
    lam: list[float] = field(default_factory=list)
    active_size: list[int] = field(default_factory=list)
    rel_change: list[float] = field(default_factory=list)
    constraint: list[float] = field(default_factory=list)
    converged: bool = False
    n_iterations: int = 0

    def __len__(self) -> int:
        return len(self.objective)


def q_from_mu(mu: float, n_samples: int) -> float:
    """Noise norm q matching a square-root-LASSO trade-off mu = N^(-1/(2q)).

    Inverts the map mu(q) = N^(-1/(2q)); requires 0 < mu < 1.
    """
    if not 0.0 < mu < 1.0:
        raise ValueError(f"mu must lie strictly between 0 and 1, got {mu}")
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    return -np.log(n_samples) / (2.0 * np.log(mu))

def mu_from_q(q: float, n_samples: int) -> float:
    """Square-root-LASSO trade-off mu = N^(-1/(2q)) induced by the noise norm."""
    if q <= 0.0:
        raise ValueError(f"q must be positive, got {q}")
    return float(n_samples) ** (-1.0 / (2.0 * q))


def initialize(signal: Signal, dictionary: Dictionary, config: SpiceConfig) -> SpiceState:
    """Matched-filter initialization.

    p_k = |b_k* y|^2 / ||b_k||^4 for every atom.  Heteroscedastic noise
    starts at sigma_k = |y_k|; uniform noise starts at the sample standard
    deviation of y replicated over all samples.
    """
    if float(np.linalg.norm(signal.samples)) <= 0.0:
        raise ValueError("signal is identically zero")
    norms_sq = dictionary.column_norms_sq
    corr = dictionary.columns.conj().T @ signal.samples
    p = np.abs(corr) ** 2 / norms_sq**2
    if config.noise_mode == "uniform":
        sigma = np.full(signal.n_samples, float(np.std(signal.samples, ddof=1)))
    else:
        sigma = np.abs(signal.samples)
    floor = _sigma_floor(signal)
    return SpiceState(p=p, sigma=np.maximum(sigma, floor))


def _sigma_floor(signal: Signal) -> float:
    ynorm_sq = float(np.vdot(signal.samples, signal.samples).real)
    return SIGMA_FLOOR_FRACTION * ynorm_sq / signal.n_samples


def _cov_solve(
    p: np.ndarray,
    sigma: np.ndarray,
    dictionary: Dictionary,
    y: np.ndarray,
    active: np.ndarray,
) -> np.ndarray:
    """z = R^{-1} y for R = B_S diag(p_S) B_S* + diag(sigma).

    Uses the matrix-inversion identity on the active set when it is smaller
    than N, a Toeplitz solve for the uniform sinusoid grid with uniform
    noise, and a dense Cholesky otherwise.  The identity path falls back to
    the dense path if its inner system is numerically singular.
    """
    n = y.size
    if np.any(sigma <= 0.0):
        raise np.linalg.LinAlgError("noise parameters must be positive to invert R")
    idx = np.flatnonzero(active)
    k = idx.size
    if k == 0:
        return y / sigma
    # the low-rank splitting amplifies rounding by (covariance scale)/min
    # sigma even when R itself is well conditioned, so it is only used when
    # the diagonal carries a reasonable share of the scale
    r_scale = float(sigma.max())
    if k:
        r_scale += float((p[idx] * dictionary.column_norms_sq[idx]).max())
    splitting_ok = sigma.min() >= 1e-7 * r_scale
    if k < n and splitting_ok:
        d_inv_y = y / sigma
        cols = dictionary.columns[:, idx]
        scaled = cols.conj().T / sigma[None, :]
        gram = scaled @ cols
        gram[np.diag_indices(k)] += 1.0 / p[idx]
        rhs = scaled @ y
        try:
            cho = sla.cho_factor(gram, lower=True)
            u = sla.cho_solve(cho, rhs)
            return d_inv_y - (cols @ u) / sigma
        except np.linalg.LinAlgError:
            pass  # fall through to the dense path
    uniform_sigma = sigma.min() == sigma.max()
    if dictionary.is_uniform_grid:
        col = _toeplitz_first_column(np.where(active, p, 0.0), n, dictionary.n_atoms)
        if uniform_sigma and k >= n:
            col0 = col.copy()
            col0[0] = col0[0].real + sigma[0]
            return sla.solve_toeplitz((col0, col0.conj()), y)
        cov = sla.toeplitz(col, col.conj())
    else:
        cols = dictionary.columns[:, idx]
        cov = (cols * p[idx]) @ cols.conj().T
    cov[np.diag_indices(n)] = cov.diagonal().real + sigma
    try:
        cho = sla.cho_factor(cov, lower=True)
        return sla.cho_solve(cho, y)
    except np.linalg.LinAlgError:
        return np.linalg.solve(cov, y)


def covariance_inverse_action(
    state: SpiceState, dictionary: Dictionary, signal: Signal
) -> np.ndarray:
    """Apply R^{-1} to the measurements without forming R when avoidable.

    With an active set S = {k : p_k > 0} smaller than N this uses

        R^{-1} = D^{-1} - D^{-1} B_S (P_S^{-1} + B_S* D^{-1} B_S)^{-1} B_S* D^{-1}

    with D = diag(sigma); otherwise a dense factorization.  Both paths agree
    to numerical precision.  Requires strictly positive sigma.
    """
    if state.p.size != dictionary.n_atoms or state.sigma.size != signal.n_samples:
        raise ValueError("state dimensions do not match signal and dictionary")
    return _cov_solve(state.p, state.sigma, dictionary, signal.samples, state.p > 0.0)


def compute_beta(state: SpiceState, dictionary: Dictionary, signal: Signal) -> BetaVector:
    """Reparametrized vector from a single linear solve z = R^{-1} y.

    beta_signal[k] = p_k b_k* z and beta_noise[j] = sigma_j z_j.  Entries
    with p_k = 0 are exactly zero.
    """
    z = covariance_inverse_action(state, dictionary, signal)
    beta_signal = np.zeros(dictionary.n_atoms, dtype=np.complex128)
    active = state.active_set
    if active.size:
        cols = dictionary.columns[:, active]
        beta_signal[active] = state.p[active] * (cols.conj().T @ z)
    return BetaVector(beta_signal=beta_signal, beta_noise=state.sigma * z)


def _uniform_noise_weight(weights: Weights) -> float:
    w = weights.noise_weights
    if not np.allclose(w, w[0], rtol=1e-12, atol=0.0):
        raise ValueError("uniform noise mode requires equal noise weights")
    return float(w[0])


def update_lambda(beta: BetaVector, weights: Weights, config: SpiceConfig) -> float:
    """Dual value enforcing the unit constraint on the updated (p, sigma).

    Heteroscedastic mode:
        lambda = (sum_k sqrt(w_k)|beta_k| + ||W_s^{1/2} beta_s||_{2q/(q+1)})^2
    Uniform mode:
        lambda = (sum_k sqrt(w_k)|beta_k| + N^{1/(2q)} sqrt(w_s) ||beta_s||_2)^2
    where w_s is the common noise weight (equal to 1 for unit-norm data).
    """
    signal_term = float(np.sum(np.sqrt(weights.signal_weights) * np.abs(beta.beta_signal)))
    q = config.q
    if config.noise_mode == "uniform":
        n = beta.beta_noise.size
        w_s = _uniform_noise_weight(weights)
        noise_term = n ** (1.0 / (2.0 * q)) * np.sqrt(w_s) * float(
            np.linalg.norm(beta.beta_noise)
        )
    else:
        noise_term = _weighted_block_norm(beta.beta_noise, weights.noise_weights, q)
    return (signal_term + noise_term) ** 2


def _weighted_block_norm(beta_noise: np.ndarray, noise_weights: np.ndarray, q: float) -> float:
    """||W_s^{1/2} beta_s|| in the 2q/(q+1) norm (plain l1 when q = 1)."""
    scaled = np.sqrt(noise_weights) * np.abs(beta_noise)
    if q == 1.0:
        return float(np.sum(scaled))
    h = 2.0 * q / (q + 1.0)
    return float(np.sum(scaled**h) ** (1.0 / h))


def update_powers(beta: BetaVector, weights: Weights, lam: float) -> np.ndarray:
    """Closed-form power update p_k = |beta_k| / (sqrt(w_k) sqrt(lambda)).

    Zero beta entries map to exactly zero powers.  Raises
    :class:`StalledIterationError` for lambda <= 0.
    """
    if lam <= 0.0:
        raise StalledIterationError(f"nonpositive dual value {lam}")
    return np.abs(beta.beta_signal) / (np.sqrt(weights.signal_weights) * np.sqrt(lam))


def update_noise(beta: BetaVector, weights: Weights, lam: float, config: SpiceConfig) -> np.ndarray:
    """Closed-form noise update with the invertibility floor applied.

    Heteroscedastic mode:
        sigma_l = w_l^{-q/(q+1)} |beta_l|^{2/(q+1)}
                  ||W_s^{1/2} beta_s||_{2q/(q+1)}^{(q-1)/(q+1)} / sqrt(lambda)
    (at q = 1 the exponents collapse to the same formula as the power
    update).  Uniform mode replicates
        sigma = ||beta_s||_2 / (sqrt(w_s) N^{1/(2q)} sqrt(lambda)).
    Entries are floored at 1e-12 ||y||^2 / N, recovered from the noise
    weights, so a vanishing noise block cannot make R singular.
    """
    if lam <= 0.0:
        raise StalledIterationError(f"nonpositive dual value {lam}")
    q = config.q
    abs_noise = np.abs(beta.beta_noise)
    n = abs_noise.size
    floor = SIGMA_FLOOR_FRACTION / (float(np.mean(weights.noise_weights)) * n)
    if config.noise_mode == "uniform":
        w_s = _uniform_noise_weight(weights)
        val = float(np.linalg.norm(abs_noise)) / (
            np.sqrt(w_s) * n ** (1.0 / (2.0 * q)) * np.sqrt(lam)
        )
        return np.full(n, max(val, floor))
    w = weights.noise_weights
    if q == 1.0:
        return np.maximum(abs_noise / (np.sqrt(w) * np.sqrt(lam)), floor)
    block = _weighted_block_norm(beta.beta_noise, w, q)
    if block == 0.0:
        return np.full(n, floor)
    return np.maximum(
        w ** (-q / (q + 1.0))
        * abs_noise ** (2.0 / (q + 1.0))
        * block ** ((q - 1.0) / (q + 1.0))
        / np.sqrt(lam),
        floor,
    )


def penalty_value(p: np.ndarray, sigma: np.ndarray, weights: Weights, r: float, q: float) -> float:
    """||W p||_r + ||W_s sigma||_q."""
    wp = weights.signal_weights * p
    ws = weights.noise_weights * sigma
    term_p = float(np.sum(wp)) if r == 1.0 else float(np.sum(wp**r) ** (1.0 / r))
    term_s = float(np.sum(ws)) if q == 1.0 else float(np.sum(ws**q) ** (1.0 / q))
    return term_p + term_s


def objective(
    state: SpiceState,
    dictionary: Dictionary,
    signal: Signal,
    weights: Weights,
    config: SpiceConfig,
) -> float:
    """Covariance-fit objective y* R^{-1} y + ||W p||_r + ||W_s sigma||_q."""
    z = covariance_inverse_action(state, dictionary, signal)
    quad = float(np.vdot(signal.samples, z).real)
    return quad + penalty_value(state.p, state.sigma, weights, config.r, config.q)


def normalize_state(state: SpiceState, weights: Weights, config: SpiceConfig) -> SpiceState:
    """Rescale (p, sigma) onto the unit constraint surface.

    The amplitude map is invariant under joint scaling of (p, sigma), so
    this only fixes the representative scale.
    """
    c = penalty_value(state.p, state.sigma, weights, config.r, config.q)
    if c <= 0.0:
        raise ValueError("state has zero penalty; cannot normalize")
    return SpiceState(p=state.p / c, sigma=state.sigma / c)


def solve(
    signal: Signal, dictionary: Dictionary, config: SpiceConfig
) -> tuple[SpiceState, SolverTrace]:
    """Run the fixed-point iteration to convergence.

    Iterates the closed-form updates until the largest relative change in
    (p, sigma) drops below ``config.rel_tolerance`` or ``max_iterations`` is
    reached (the trace is then flagged non-converged).  Atoms whose power
    falls strictly below ``prune_threshold * max(p)`` are removed from the
    active set permanently; ties at the threshold are kept.

    Returns the state scaled to minimize the unconstrained objective,
    together with the per-iteration trace.
    """
    if config.r != 1.0:
        raise ValueError("the fixed-point path requires r = 1; use the penalized-regression solver for r > 1")
    scale = signal.norm
    if scale <= 0.0:
        raise ValueError("signal is identically zero")

    # work in the unit-norm frame; all noise weights are exactly 1 there
    y = signal.samples / scale
    unit_signal = Signal(y)
    weights = compute_weights(unit_signal, dictionary)
    w = weights.signal_weights
    sqrt_w = np.sqrt(w)
    n = unit_signal.n_samples
    m = dictionary.n_atoms
    q = config.q
    uniform = config.noise_mode == "uniform"
    floor = _sigma_floor(unit_signal)
    noise_scale = n ** (1.0 / (2.0 * q))
    h = 2.0 * q / (q + 1.0)

    state0 = initialize(unit_signal, dictionary, config)
    p = state0.p.copy()
    sigma = state0.sigma.copy()
    c = penalty_value(p, sigma, weights, 1.0, q)
    p /= c
    sigma /= c
    active = p > 0.0

    trace = SolverTrace()
    cols = dictionary.columns

    def beta_and_lambda(p, sigma, active, z):
        idx = np.flatnonzero(active)
        beta_active = p[idx] * (cols[:, idx].conj().T @ z)
        beta_noise = sigma * z
        abs_beta = np.abs(beta_active)
        signal_term = float(np.sum(sqrt_w[idx] * abs_beta))
        if uniform:
            block = float(np.linalg.norm(beta_noise))
            lam = (signal_term + noise_scale * block) ** 2
        else:
            abs_noise = np.abs(beta_noise)
            block = (
                float(np.sum(abs_noise))
                if q == 1.0
                else float(np.sum(abs_noise**h) ** (1.0 / h))
            )
            lam = (signal_term + block) ** 2
        return idx, abs_beta, beta_noise, block, lam

    def record(z, lam, rel, raw_constraint):
        quad = float(np.vdot(y, z).real)
        trace.objective.append(quad + penalty_value(p, sigma, weights, 1.0, q))
        trace.lam.append(lam)
        trace.active_size.append(int(np.count_nonzero(active)))
        trace.rel_change.append(rel)
        trace.constraint.append(raw_constraint)

    rel = float("nan")
    raw_constraint = float("nan")
    for iteration in range(1, config.max_iterations + 1):
        z = _cov_solve(p, sigma, dictionary, y, active)
        idx, abs_beta, beta_noise, block, lam = beta_and_lambda(p, sigma, active, z)
        if lam <= 0.0:
            raise StalledIterationError(f"nonpositive dual value {lam}")
        record(z, lam, rel, raw_constraint)

        sqrt_lam = np.sqrt(lam)
        p_new = np.zeros(m)
        p_new[idx] = abs_beta / (sqrt_w[idx] * sqrt_lam)
        if uniform:
            sigma_new = np.full(n, max(block / (noise_scale * sqrt_lam), floor))
        elif q == 1.0:
            sigma_new = np.maximum(np.abs(beta_noise) / sqrt_lam, floor)
        else:
            sigma_new = np.maximum(
                np.abs(beta_noise) ** (2.0 / (q + 1.0))
                * block ** ((q - 1.0) / (q + 1.0))
                / sqrt_lam,
                floor,
            )
        raw_constraint = penalty_value(p_new, sigma_new, weights, 1.0, q)
        p_new /= raw_constraint
        sigma_new /= raw_constraint

        # change is measured against the largest parameter, so a collectively
        # vanishing power block converges instead of chasing its own decay
        denom = max(p.max(initial=0.0), sigma.max())
        rel = max(np.abs(p_new - p).max(), np.abs(sigma_new - sigma).max()) / denom

        # permanent pruning, strict inequality so exact ties survive
        if p_new.any():
            cut = max(config.prune_threshold * p_new.max(), UNDERFLOW_PRUNE)
            p_new[p_new < cut] = 0.0
            active = p_new > 0.0
        p, sigma = p_new, sigma_new
        trace.n_iterations = iteration
        if rel < config.rel_tolerance:
            trace.converged = True
            break

    z = _cov_solve(p, sigma, dictionary, y, active)
    _, _, _, _, lam = beta_and_lambda(p, sigma, active, z)
    record(z, lam, rel, raw_constraint)

    # rescale: first to the minimizer of the unconstrained objective in the
    # unit-norm frame, then back to the original data scale (degree 2)
    quad = float(np.vdot(y, z).real)
    gamma = np.sqrt(quad / penalty_value(p, sigma, weights, 1.0, q))
    factor = gamma * scale * scale
    return SpiceState(p=p * factor, sigma=sigma * factor), trace
