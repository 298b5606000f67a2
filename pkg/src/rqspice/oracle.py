"""Independent convex solvers for the equivalent penalized-regression forms.

The covariance-fit criterion with norms (r, q) matches a penalized
regression in the amplitude vector x:

    heteroscedastic noise:
        minimize ||W_s^{1/2} (y - B x)||_{2q/(q+1)} + ||W^{1/2} x||_{2r/(r+1)}
    uniform noise:
        minimize ||y - B x||_2 + mu ||W^{1/2} x||_{2r/(r+1)},  mu = N^(-1/(2q))

This module solves those problems directly with a proximal-gradient method
on a smoothed fit term (smoothing annealed down to 1e-10 with a final
fixed-point polish), never touching the covariance parametrization, so it
can serve as an oracle for the fixed-point solver and also covers r > 1 and
arbitrary mu.  Closed-form maps between amplitudes/residuals and the
covariance parameters are provided alongside, plus the covariance-fit value
itself for local-optimality probes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model import Dictionary, Signal, SpiceState, Weights, form_covariance

__all__ = [
    "PenalizedProblem",
    "uniform_noise_problem",
    "heteroscedastic_problem",
    "solve_penalized",
    "penalized_objective",
    "powers_from_amplitudes",
    "noise_from_residual",
    "covfit_objective",
    "lattice_minimize",
]


@dataclass(frozen=True)
class PenalizedProblem:
    """Convex penalized regression with mixed-norm fit and penalty.

    ``fit_norm_exponent`` is 2q/(q+1) in [1, 2]; ``penalty_norm_exponent``
    is 2r/(r+1), equal to 1 for r = 1.  ``fit_weights`` scale the residual
    elementwise, ``penalty_weights`` scale the amplitudes, and ``mu``
    multiplies the penalty (1 unless the uniform-noise form is used).
    """

    fit_norm_exponent: float
    penalty_norm_exponent: float
    fit_weights: np.ndarray
    penalty_weights: np.ndarray
    mu: float = 1.0

    def __post_init__(self):
        if not 1.0 <= self.fit_norm_exponent <= 2.0:
            raise ValueError("fit norm exponent must lie in [1, 2]")
        if not 1.0 <= self.penalty_norm_exponent <= 2.0:
            raise ValueError("penalty norm exponent must lie in [1, 2]")
        if self.mu <= 0.0:
            raise ValueError("mu must be positive")
        fw = np.asarray(self.fit_weights, dtype=np.float64)
        pw = np.asarray(self.penalty_weights, dtype=np.float64)
        if np.any(fw <= 0.0) or np.any(pw <= 0.0):
            raise ValueError("weights must be strictly positive")
        object.__setattr__(self, "fit_weights", fw)
        object.__setattr__(self, "penalty_weights", pw)


def _fit_exponent(q: float) -> float:
    return 2.0 * q / (q + 1.0)


def uniform_noise_problem(signal: Signal, dictionary: Dictionary, q: float, r: float = 1.0) -> PenalizedProblem:
    """Square-root-LASSO form matched to the uniform-noise estimator.

    The fit term is the plain Euclidean norm of the residual, the penalty
    weights are the dictionary column norms, and mu = N^(-1/(2q)).  For
    unit-norm measurements the penalty weights coincide with the square
    roots of the covariance-fit signal weights.
    """
    if q < 1.0 or r < 1.0:
        raise ValueError("norm orders must be >= 1")
    n = signal.n_samples
    return PenalizedProblem(
        fit_norm_exponent=2.0,
        penalty_norm_exponent=_fit_exponent(r),
        fit_weights=np.ones(n),
        penalty_weights=np.sqrt(dictionary.column_norms_sq),
        mu=float(n) ** (-1.0 / (2.0 * q)),
    )


def heteroscedastic_problem(weights: Weights, q: float, r: float = 1.0) -> PenalizedProblem:
    """Weighted-residual form matched to the per-sample-noise estimator."""
    if q < 1.0 or r < 1.0:
        raise ValueError("norm orders must be >= 1")
    return PenalizedProblem(
        fit_norm_exponent=_fit_exponent(q),
        penalty_norm_exponent=_fit_exponent(r),
        fit_weights=np.sqrt(weights.noise_weights),
        penalty_weights=np.sqrt(weights.signal_weights),
        mu=1.0,
    )


def penalized_objective(problem: PenalizedProblem, x: np.ndarray, signal: Signal, dictionary: Dictionary) -> float:
    """Exact (unsmoothed) objective value at x."""
    u = problem.fit_weights * (signal.samples - dictionary.columns @ x)
    h = problem.fit_norm_exponent
    fit = float(np.linalg.norm(u)) if h == 2.0 else float(np.sum(np.abs(u) ** h) ** (1.0 / h))
    g = problem.penalty_norm_exponent
    v = problem.penalty_weights * np.abs(x)
    pen = float(np.sum(v)) if g == 1.0 else float(np.sum(v**g) ** (1.0 / g))
    return fit + problem.mu * pen


def _smoothed_fit_grad(x, y, cols, fw, h, eps):
    """Smoothed fit value and its gradient (real-pair convention)."""
    u = fw * (y - cols @ x)
    a2 = np.abs(u) ** 2 + eps * eps
    s = np.sum(a2 ** (h / 2.0))
    f = s ** (1.0 / h)
    grad = -(s ** (1.0 / h - 1.0)) * (cols.conj().T @ (fw * (a2 ** (h / 2.0 - 1.0) * u)))
    return f, grad


def _smoothed_pen_grad(x, pw, g, eps):
    v2 = (pw * np.abs(x)) ** 2 + eps * eps
    s = np.sum(v2 ** (g / 2.0))
    f = s ** (1.0 / g)
    grad = (s ** (1.0 / g - 1.0)) * (pw**2 * v2 ** (g / 2.0 - 1.0)) * x
    return f, grad


def _soft_shrink(z: np.ndarray, tau: np.ndarray) -> np.ndarray:
    mag = np.abs(z)
    scale = np.maximum(mag - tau, 0.0) / np.where(mag > 0.0, mag, 1.0)
    return scale * z


def solve_penalized(
    problem: PenalizedProblem,
    signal: Signal,
    dictionary: Dictionary,
    rel_tolerance: float = 1e-10,
    max_iterations: int = 40000,
    stagnation_window: int = 300,
) -> tuple[np.ndarray, bool]:
    """Minimize the penalized regression objective.

    Accelerated proximal gradient with backtracking on the smoothed fit
    term; the smoothing parameter is annealed from 1e-2 of the data scale
    down to 1e-10, each stage warm-started, and the last stage acts as the
    fixed-point polish.  An l1 penalty is handled by its exact prox, so off
    support coordinates are exact zeros; penalty exponents above 1 are
    smoothed into the gradient.  The problem is convex, so any fixed point
    is a global minimizer.

    A stage stops on a small relative step or when the objective has not
    improved for ``stagnation_window`` iterations (the fixed-point
    criterion).  Returns (x, converged); ``converged`` is False only when
    the final stage hit the iteration cap with neither criterion met.
    """
    y = signal.samples
    cols = dictionary.columns
    h = problem.fit_norm_exponent
    g = problem.penalty_norm_exponent
    fw = problem.fit_weights
    pw = problem.penalty_weights
    mu = problem.mu
    l1 = g == 1.0
    thresh = mu * pw
    scale = float(np.linalg.norm(fw * y))
    if scale == 0.0:
        return np.zeros(cols.shape[1], dtype=np.complex128), True

    x = np.zeros(cols.shape[1], dtype=np.complex128)
    op_norm_sq = np.linalg.norm(fw[:, None] * cols, 2) ** 2
    converged = True
    slack = 1e-15 * scale
    eps = 0.0

    def prox_step(point, grad, step):
        """Backtracked proximal step from ``point``: (candidate, fit, step)."""
        f_point = _full_grad(point, y, cols, fw, pw, h, g, mu, eps, l1, value_only=True)
        while True:
            if l1:
                candidate = _soft_shrink(point - step * grad, step * thresh)
            else:
                candidate = point - step * grad
            d = candidate - point
            f_cand = _full_grad(candidate, y, cols, fw, pw, h, g, mu, eps, l1, value_only=True)
            bound = f_point + np.vdot(grad, d).real + np.vdot(d, d).real / (2.0 * step)
            if f_cand <= bound + slack or step * op_norm_sq < 1e-18:
                return candidate, f_cand, step
            step *= 0.5

    stages = scale * 10.0 ** np.arange(-2.0, -11.0, -2.0)
    for stage_index, eps in enumerate(stages):
        final = stage_index == len(stages) - 1
        cap = max_iterations if final else max(200, max_iterations // 20)
        step = 1.0 / op_norm_sq
        momentum = 1.0
        v = x.copy()
        g_v = _full_grad(v, y, cols, fw, pw, h, g, mu, eps, l1)[1]
        obj_x = _objective_smoothed(x, y, cols, fw, pw, h, g, mu, eps, l1)
        best_obj = obj_x
        since_improved = 0
        stage_done = False
        for k in range(cap):
            step *= 1.3
            x_new, f_new, step = prox_step(v, g_v, step)
            obj_new = f_new + (mu * np.sum(pw * np.abs(x_new)) if l1 else 0.0)
            if obj_new > obj_x + slack:
                # momentum overshot: take a monotone step from x instead
                momentum = 1.0
                g_x = _full_grad(x, y, cols, fw, pw, h, g, mu, eps, l1)[1]
                x_new, f_new, step = prox_step(x, g_x, step)
                obj_new = f_new + (mu * np.sum(pw * np.abs(x_new)) if l1 else 0.0)
            rel = np.linalg.norm(x_new - x) / max(np.linalg.norm(x_new), 1e-30)
            momentum_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * momentum * momentum))
            v = x_new + ((momentum - 1.0) / momentum_new) * (x_new - x)
            momentum = momentum_new
            x = x_new
            obj_x = obj_new
            if obj_new < best_obj - slack:
                best_obj = obj_new
                since_improved = 0
            else:
                since_improved += 1
            g_v = _full_grad(v, y, cols, fw, pw, h, g, mu, eps, l1)[1]
            if k > 20 and (rel < rel_tolerance or since_improved >= stagnation_window):
                stage_done = True
                break
        if final and not stage_done:
            converged = False
    return x, converged


def _full_grad(x, y, cols, fw, pw, h, g, mu, eps, l1, value_only=False):
    f, grad = _smoothed_fit_grad(x, y, cols, fw, h, eps)
    if not l1:
        fp, gp = _smoothed_pen_grad(x, pw, g, eps)
        f = f + mu * fp
        if not value_only:
            grad = grad + mu * gp
    if value_only:
        return f
    return f, grad


def _objective_smoothed(x, y, cols, fw, pw, h, g, mu, eps, l1):
    f = _full_grad(x, y, cols, fw, pw, h, g, mu, eps, l1, value_only=True)
    if l1:
        f = f + mu * np.sum(pw * np.abs(x))
    return f


def powers_from_amplitudes(x: np.ndarray, weights: Weights, r: float) -> np.ndarray:
    """Closed-form minimizer of the power block at fixed amplitudes.

    p_j = w_j^{-r/(r+1)} |x_j|^{2/(r+1)} ||W^{1/2} x||_{2r/(r+1)}^{(r-1)/(r+1)},
    which collapses to |x_j| / sqrt(w_j) at r = 1.
    """
    if r < 1.0:
        raise ValueError("r must be >= 1")
    w = weights.signal_weights
    ax = np.abs(np.asarray(x))
    if r == 1.0:
        return ax / np.sqrt(w)
    if not ax.any():
        return np.zeros_like(ax)
    e = 2.0 * r / (r + 1.0)
    block = np.sum((np.sqrt(w) * ax) ** e) ** (1.0 / e)
    return w ** (-r / (r + 1.0)) * ax ** (2.0 / (r + 1.0)) * block ** ((r - 1.0) / (r + 1.0))


def noise_from_residual(residual: np.ndarray, noise_weights: np.ndarray, q: float) -> np.ndarray:
    """Closed-form minimizer of the noise block at a fixed residual.

    sigma_k = w_k^{-q/(q+1)} |res_k|^{2/(q+1)}
              ||W_s^{1/2} res||_{2q/(q+1)}^{(q-1)/(q+1)}
    and the aggregate identity ||W_s sigma||_q = ||W_s^{1/2} res||_{2q/(q+1)}
    holds at the output.
    """
    if q < 1.0:
        raise ValueError("q must be >= 1")
    w = np.asarray(noise_weights, dtype=np.float64)
    ar = np.abs(np.asarray(residual))
    if q == 1.0:
        return ar / np.sqrt(w)
    if not ar.any():
        return np.zeros_like(ar)
    e = 2.0 * q / (q + 1.0)
    block = np.sum((np.sqrt(w) * ar) ** e) ** (1.0 / e)
    return w ** (-q / (q + 1.0)) * ar ** (2.0 / (q + 1.0)) * block ** ((q - 1.0) / (q + 1.0))


def covfit_objective(state: SpiceState, dictionary: Dictionary, signal: Signal) -> float:
    """Frobenius covariance-fit value || R^{-1/2} (R - y y*) ||_F^2.

    Evaluated through the eigendecomposition of R; eigenvalues in
    (-1e-12 * max, 0] are clamped to zero (with a warning) and excluded
    together with their residual components, which must themselves be
    negligible for the value to be finite.
    """
    cov = form_covariance(state, dictionary)
    vals, vecs = np.linalg.eigh(cov)
    top = float(vals.max())
    tol = 1e-12 * max(top, 1.0)
    if np.any(vals < -tol):
        raise np.linalg.LinAlgError("covariance is not positive semidefinite")
    if np.any(vals < 0.0):
        warnings.warn("clamping slightly negative covariance eigenvalues to zero")
        vals = np.maximum(vals, 0.0)
    y = signal.samples
    # columns of (R - y y*) U, computed without forming the outer product
    cross = vecs * vals - np.outer(y, y.conj() @ vecs)
    comp_sq = np.einsum("ij,ij->j", cross.conj(), cross).real
    keep = vals > tol
    dropped = comp_sq[~keep]
    if np.any(dropped > tol * max(float(np.vdot(y, y).real) ** 2, 1.0)):
        raise np.linalg.LinAlgError("residual has components in the null space of R")
    return float(np.sum(comp_sq[keep] / vals[keep]))


def lattice_minimize(objective, n_dims: int, radius: float, final_step: float = 1e-3):
    """Coarse-to-fine lattice search for tiny problems.

    Evaluates ``objective`` on a regular lattice over a hypercube of the
    given radius, repeatedly zooming into the best cell until the lattice
    step falls below ``final_step``.  Intended as a brute-force reference
    for at most 4 real dimensions; for convex objectives the zoom keeps the
    global minimizer inside the search box.
    """
    points_per_dim = 9
    center = np.zeros(n_dims)
    half = float(radius)
    best = None
    while True:
        axes = [np.linspace(c - half, c + half, points_per_dim) for c in center]
        mesh = np.meshgrid(*axes, indexing="ij")
        grid = np.stack([m.ravel() for m in mesh], axis=1)
        vals = np.array([objective(pt) for pt in grid])
        best_idx = int(np.argmin(vals))
        center = grid[best_idx]
        best = vals[best_idx]
        step = 2.0 * half / (points_per_dim - 1)
        if step <= final_step:
            return center, best
        # keep the previous lattice step inside the new box so the minimum
        # cannot escape between zoom levels
        half = 2.0 * step
