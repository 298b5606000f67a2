"""Linear measurement model, dictionaries, covariance assembly and weights.

The measurement vector ``y`` (length N) is modelled as a sparse combination
of dictionary atoms plus noise.  The covariance parametrization augments the
dictionary with identity columns, so per-sample noise parameters enter the
model covariance as extra diagonal terms:

    R(p, sigma) = B diag(p) B* + diag(sigma)

with ``p >= 0`` the atom powers and ``sigma >= 0`` the noise parameters.
Everything in this module is a pure function of immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

__all__ = [
    "Signal",
    "Dictionary",
    "Weights",
    "SpiceState",
    "build_sinusoid_dictionary",
    "compute_weights",
    "form_covariance",
    "amplitudes_from_powers",
]


def _frozen_complex_array(values, name: str, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128, copy=True, order="C")
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Signal:
    """Complex measurement vector.

    Parameters
    ----------
    samples : array_like
        Length-N complex vector, N >= 2.  Real input is embedded as complex
        with zero imaginary part.
    """

    samples: np.ndarray

    def __post_init__(self):
        arr = _frozen_complex_array(self.samples, "samples", 1)
        if arr.size < 2:
            raise ValueError(f"signal needs at least 2 samples, got {arr.size}")
        object.__setattr__(self, "samples", arr)

    @property
    def n_samples(self) -> int:
        return self.samples.size

    @property
    def norm(self) -> float:
        """Euclidean norm of the samples."""
        return float(np.linalg.norm(self.samples))


@dataclass(frozen=True)
class Dictionary:
    """N x M complex regressor matrix, optionally tied to a frequency grid.

    When ``grid_frequencies`` is given, column k must equal the complex
    exponential exp(i 2 pi f_k n), n = 0..N-1; this is checked on
    construction.  A dictionary whose grid is exactly f_k = k/M (k = 1..M)
    additionally enables fast Toeplitz/FFT covariance paths.
    """

    columns: np.ndarray
    grid_frequencies: np.ndarray | None = None

    def __post_init__(self):
        cols = _frozen_complex_array(self.columns, "columns", 2)
        if cols.shape[1] < 1:
            raise ValueError("dictionary needs at least one atom")
        norms_sq = np.einsum("ij,ij->j", cols.conj(), cols).real
        if np.any(norms_sq <= 0.0):
            raise ValueError("every dictionary column must have positive norm")
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "_column_norms_sq", norms_sq)
        freqs = self.grid_frequencies
        uniform = False
        if freqs is not None:
            freqs = np.asarray(freqs, dtype=np.float64).copy()
            freqs.setflags(write=False)
            if freqs.shape != (cols.shape[1],):
                raise ValueError("grid_frequencies must have one entry per atom")
            if np.any(freqs <= 0.0) or np.any(freqs > 1.0):
                raise ValueError("grid frequencies must lie in (0, 1]")
            n = np.arange(cols.shape[0])[:, None]
            expected = np.exp(2j * np.pi * freqs[None, :] * n)
            if not np.allclose(cols, expected, rtol=0.0, atol=1e-9):
                raise ValueError("columns do not match the declared frequency grid")
            m = freqs.size
            uniform = bool(np.array_equal(freqs, np.arange(1, m + 1) / m))
        object.__setattr__(self, "grid_frequencies", freqs)
        object.__setattr__(self, "_uniform_grid", uniform)

    @property
    def n_samples(self) -> int:
        return self.columns.shape[0]

    @property
    def n_atoms(self) -> int:
        return self.columns.shape[1]

    @property
    def column_norms_sq(self) -> np.ndarray:
        """Squared Euclidean norm of each column."""
        return self._column_norms_sq

    @property
    def is_uniform_grid(self) -> bool:
        """True when the atoms are exactly the uniform sinusoid grid k/M."""
        return self._uniform_grid


@dataclass(frozen=True)
class Weights:
    """Diagonal penalty weights for atom powers and noise parameters.

    ``signal_weights[k] = ||b_k||^2 / ||y||^2`` and every noise weight equals
    ``1 / ||y||^2`` because the noise enters through unit identity columns.
    """

    signal_weights: np.ndarray
    noise_weights: np.ndarray

    def __post_init__(self):
        sw = np.asarray(self.signal_weights, dtype=np.float64).copy()
        nw = np.asarray(self.noise_weights, dtype=np.float64).copy()
        if sw.ndim != 1 or nw.ndim != 1:
            raise ValueError("weights must be 1-dimensional vectors")
        if np.any(sw <= 0.0) or np.any(nw <= 0.0):
            raise ValueError("weights must be strictly positive")
        sw.setflags(write=False)
        nw.setflags(write=False)
        object.__setattr__(self, "signal_weights", sw)
        object.__setattr__(self, "noise_weights", nw)


@dataclass(frozen=True)
class SpiceState:
    """Nonnegative covariance parameters: atom powers and noise terms."""

    p: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64).copy()
        sigma = np.asarray(self.sigma, dtype=np.float64).copy()
        if p.ndim != 1 or sigma.ndim != 1:
            raise ValueError("state vectors must be 1-dimensional")
        if np.any(p < 0.0) or np.any(sigma < 0.0):
            raise ValueError("state entries must be nonnegative")
        if not (np.any(p > 0.0) or np.any(sigma > 0.0)):
            raise ValueError("state must have at least one positive entry")
        p.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "sigma", sigma)

    @property
    def active_set(self) -> np.ndarray:
        """Indices of atoms with strictly positive power."""
        return np.flatnonzero(self.p > 0.0)


def build_sinusoid_dictionary(n_samples: int, n_grid: int) -> Dictionary:
    """Uniform grid of complex sinusoids on (0, 1].

    Column k (1-based) holds exp(i 2 pi f_k n) for n = 0..N-1 with
    f_k = k/M, so the endpoint f = 1 is included and f = 0 excluded.
    Every column has squared norm N.

    Parameters
    ----------
    n_samples : int
        Signal length N, at least 2.
    n_grid : int
        Number of grid atoms M, at least 1.
    """
    if n_samples < 2:
        raise ValueError(f"n_samples must be >= 2, got {n_samples}")
    if n_grid < 1:
        raise ValueError(f"n_grid must be >= 1, got {n_grid}")
    freqs = np.arange(1, n_grid + 1) / n_grid
    n = np.arange(n_samples)[:, None]
    cols = np.exp(2j * np.pi * freqs[None, :] * n)
    return Dictionary(columns=cols, grid_frequencies=freqs)


def compute_weights(signal: Signal, dictionary: Dictionary) -> Weights:
    """Penalty weights ||a_k||^2 / ||y||^2 over the augmented atom set.

    The first M weights come from the dictionary columns; the trailing N
    (noise) weights are all 1 / ||y||^2 since identity columns have unit
    norm.  Raises on an all-zero signal.
    """
    if dictionary.n_samples != signal.n_samples:
        raise ValueError("signal and dictionary dimensions disagree")
    ynorm_sq = float(np.vdot(signal.samples, signal.samples).real)
    if ynorm_sq <= 0.0:
        raise ValueError("signal is identically zero; weights are undefined")
    return Weights(
        signal_weights=dictionary.column_norms_sq / ynorm_sq,
        noise_weights=np.full(signal.n_samples, 1.0 / ynorm_sq),
    )


def _toeplitz_first_column(p: np.ndarray, n_samples: int, n_grid: int) -> np.ndarray:
    # c[d] = sum_k p_k exp(i 2 pi k d / M), k = 1..M; an inverse FFT of p
    # shifted by one grid step.  Valid only for the uniform grid f_k = k/M.
    c = n_grid * np.fft.ifft(p)
    d = np.arange(n_samples) % n_grid
    col = c[d] * np.exp(2j * np.pi * np.arange(n_samples) / n_grid)
    col[0] = col[0].real
    return col


def form_covariance(state: SpiceState, dictionary: Dictionary) -> np.ndarray:
    """Model covariance R = B diag(p) B* + diag(sigma).

    Returns a Hermitian positive semidefinite N x N matrix; it is positive
    definite whenever all noise parameters are positive.  Raises
    ``numpy.linalg.LinAlgError`` for an all-zero state.
    """
    if state.p.size != dictionary.n_atoms:
        raise ValueError("state power vector does not match the dictionary")
    n = dictionary.n_samples
    if state.sigma.size != n:
        raise ValueError("state noise vector does not match the signal length")
    if not (np.any(state.p > 0.0) or np.any(state.sigma > 0.0)):
        raise np.linalg.LinAlgError("all-zero state gives a singular covariance")
    if dictionary.is_uniform_grid:
        col = _toeplitz_first_column(state.p, n, dictionary.n_atoms)
        cov = sla.toeplitz(col, col.conj())
    else:
        active = state.active_set
        cols = dictionary.columns[:, active]
        cov = (cols * state.p[active]) @ cols.conj().T
    cov[np.diag_indices(n)] = cov.diagonal().real + state.sigma
    # symmetrize away FFT/gemm rounding so Hermiticity holds to machine precision
    cov = 0.5 * (cov + cov.conj().T)
    return cov


def amplitudes_from_powers(
    state: SpiceState, dictionary: Dictionary, signal: Signal
) -> np.ndarray:
    """Map covariance powers to complex amplitudes.

    Returns x_hat with x_hat[k] = p_k b_k* R^{-1} y, the minimizer of the
    weighted ridge problem

        (y - B x)* diag(sigma)^{-1} (y - B x) + sum_k |x_k|^2 / p_k

    restricted to the atoms with p_k > 0; entries with p_k = 0 are exactly
    zero.  Raises ``numpy.linalg.LinAlgError`` when R is singular.
    """
    cov = form_covariance(state, dictionary)
    try:
        cho = sla.cho_factor(cov, lower=True)
        z = sla.cho_solve(cho, signal.samples)
    except np.linalg.LinAlgError:
        z = np.linalg.solve(cov, signal.samples)
    x_hat = np.zeros(dictionary.n_atoms, dtype=np.complex128)
    active = state.active_set
    if active.size:
        cols = dictionary.columns[:, active]
        x_hat[active] = state.p[active] * (cols.conj().T @ z)
    return x_hat
