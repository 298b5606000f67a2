"""Peak picking, support matching and amplitude refitting.

Turns a sparse amplitude vector on a frequency grid into a peak list, a
support set and a model-order estimate, and scores the result against the
true component frequencies.  Frequencies live on the circular interval
(0, 1], so all distances wrap around the grid endpoint.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import Dictionary, Signal

__all__ = [
    "Peak",
    "SpectralEstimate",
    "circular_distance",
    "pick_peaks",
    "match_support",
    "rmse_frequencies",
    "refit_amplitudes",
]


class Peak(NamedTuple):
    grid_index: int
    frequency: float
    magnitude: float


@dataclass(frozen=True)
class SpectralEstimate:
    """Thresholded spectral estimate: amplitudes, peaks, support, order."""

    x_hat: np.ndarray
    peaks: tuple[Peak, ...]
    support: tuple[int, ...]
    model_order: int


def circular_distance(f1, f2):
    """Wrap-around distance between normalized frequencies on (0, 1]."""
    d = np.abs(np.mod(np.asarray(f1, dtype=float) - np.asarray(f2, dtype=float), 1.0))
    return np.minimum(d, 1.0 - d)


def pick_peaks(
    x_hat: np.ndarray,
    threshold_fraction: float = 0.2,
    grid_frequencies: np.ndarray | None = None,
) -> SpectralEstimate:
    """Threshold the amplitude spectrum and merge adjacent kept bins.

    Keeps elements with |x_k| >= threshold_fraction * max|x|.  A kept bin
    becomes a peak when it is a local magnitude maximum over its immediate
    (circularly wrapped) grid neighbors, so an adjacent pair of kept bins
    collapses into one peak instead of double counting a single component.
    Plateaus of exactly equal neighbors count once, at their first bin.
    An all-zero input yields an empty estimate.

    Because the local-maximum property does not depend on the threshold,
    raising ``threshold_fraction`` can only remove peaks, never add them.

    When ``grid_frequencies`` is omitted, the canonical uniform grid
    f_k = (k+1)/M is assumed.
    """
    if not 0.0 < threshold_fraction <= 1.0:
        raise ValueError("threshold_fraction must lie in (0, 1]")
    x_hat = np.asarray(x_hat, dtype=np.complex128)
    m = x_hat.size
    if grid_frequencies is None:
        grid_frequencies = np.arange(1, m + 1) / m
    mags = np.abs(x_hat)
    top = mags.max() if m else 0.0
    if top <= 0.0:
        return SpectralEstimate(x_hat=x_hat, peaks=(), support=(), model_order=0)
    kept = mags >= threshold_fraction * top
    left = np.roll(mags, 1)
    right = np.roll(mags, -1)
    local_max = kept & (mags >= left) & (mags >= right)
    # collapse plateaus: a bin tied with its kept left neighbor defers to it
    plateau = local_max & (mags == left) & np.roll(kept, 1)
    indices = np.flatnonzero(local_max & ~plateau)
    if indices.size == 0:
        # degenerate all-equal plateau: keep a single representative
        indices = np.flatnonzero(kept)[:1]
    peaks = tuple(
        Peak(int(k), float(grid_frequencies[k]), float(mags[k])) for k in indices
    )
    return SpectralEstimate(
        x_hat=x_hat,
        peaks=peaks,
        support=tuple(pk.grid_index for pk in peaks),
        model_order=len(peaks),
    )


def _greedy_assignment(est: np.ndarray, true: np.ndarray) -> list[tuple[int, int, float]]:
    """Greedy one-to-one nearest pairing by ascending circular distance."""
    pairs = sorted(
        (float(circular_distance(e, t)), i, j)
        for i, e in enumerate(est)
        for j, t in enumerate(true)
    )
    used_e: set[int] = set()
    used_t: set[int] = set()
    out = []
    for dist, i, j in pairs:
        if i in used_e or j in used_t:
            continue
        used_e.add(i)
        used_t.add(j)
        out.append((i, j, dist))
    return out


def match_support(
    estimate: SpectralEstimate,
    true_frequencies,
    grid_tolerance: int = 2,
    grid_spacing: float | None = None,
) -> bool:
    """Whether the peaks recover the true components.

    True iff the model order equals the number of true components and a
    greedy one-to-one nearest-frequency assignment places every pair within
    grid_tolerance * grid_spacing, measured circularly on (0, 1].
    """
    true = np.asarray(true_frequencies, dtype=float)
    if grid_spacing is None or grid_spacing <= 0.0:
        raise ValueError("grid_spacing must be a positive frequency step")
    if estimate.model_order != true.size:
        return False
    if true.size == 0:
        return True
    est = np.array([pk.frequency for pk in estimate.peaks])
    matched = _greedy_assignment(est, true)
    limit = grid_tolerance * grid_spacing + 1e-12
    return all(d <= limit for _, _, d in matched)


def rmse_frequencies(estimate: SpectralEstimate, true_frequencies) -> float | None:
    """Root-mean-square circular frequency error over the true components.

    Uses the P largest-magnitude peaks where P is the number of true
    components.  Returns None (excluded trial) when fewer than P peaks are
    available.
    """
    true = np.asarray(true_frequencies, dtype=float)
    p = true.size
    if p == 0:
        raise ValueError("true_frequencies must be nonempty")
    if estimate.model_order < p:
        return None
    by_mag = sorted(estimate.peaks, key=lambda pk: pk.magnitude, reverse=True)[:p]
    est = np.array([pk.frequency for pk in by_mag])
    matched = _greedy_assignment(est, true)
    return float(np.sqrt(np.mean([d**2 for _, _, d in matched])))


def refit_amplitudes(signal: Signal, dictionary: Dictionary, support) -> np.ndarray:
    """Least-squares amplitudes on the support columns.

    Removes the downward bias of the sparse penalty once the support is
    fixed.  Requires |support| <= N and a full-column-rank submatrix.
    """
    support = np.asarray(sorted(support), dtype=int)
    if support.size == 0:
        raise ValueError("support is empty")
    if support.size > signal.n_samples:
        raise ValueError("support larger than the number of samples")
    sub = dictionary.columns[:, support]
    coef, _, rank, _ = np.linalg.lstsq(sub, signal.samples, rcond=None)
    if rank < support.size:
        raise np.linalg.LinAlgError("support submatrix is rank deficient")
    return coef
