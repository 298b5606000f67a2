"""File formats: signal/dictionary CSV, scenario JSON, result writers.

All writers go through an atomic temp-file-plus-rename, so a failed run
never leaves a partial output behind.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile

import numpy as np

from .harness import Component, ResultRow, Scenario
from .model import Dictionary, Signal
from .solver import SpiceConfig, SolverTrace

__all__ = [
    "atomic_write_text",
    "format_float",
    "load_signal_csv",
    "save_signal_csv",
    "load_dictionary_csv",
    "save_dictionary_csv",
    "load_scenario_json",
    "scenario_from_dict",
    "write_estimate_csv",
    "write_trace_csv",
    "write_results_csv",
]


def format_float(value: float) -> str:
    return format(value, ".12g")


def atomic_write_text(path, text: str) -> None:
    """Write text to ``path`` via a temp file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_signal_csv(path) -> Signal:
    """Signal from CSV with two columns (real, imag); a header row is allowed."""
    rows = _read_numeric_rows(path, 2)
    data = np.array([complex(r, i) for r, i in rows])
    return Signal(data)


def save_signal_csv(path, signal: Signal) -> None:
    lines = ["real,imag"]
    for v in signal.samples:
        lines.append(f"{format_float(v.real)},{format_float(v.imag)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_dictionary_csv(path) -> Dictionary:
    """Dictionary from CSV: a ``# n_samples,n_atoms`` header line, then the
    matrix entries row-major as (real, imag) pairs, one per line."""
    with open(path, newline="") as handle:
        first = handle.readline().strip()
        if not first.startswith("#"):
            raise ValueError("dictionary csv must start with '# n_samples,n_atoms'")
        dims = first.lstrip("#").split(",")
        n, m = int(dims[0]), int(dims[1])
        rows = [row for row in csv.reader(handle) if row and not row[0].startswith("#")]
    if len(rows) != n * m:
        raise ValueError(f"expected {n * m} entries, found {len(rows)}")
    flat = np.array([complex(float(r), float(i)) for r, i in rows])
    return Dictionary(columns=flat.reshape(n, m))


def save_dictionary_csv(path, dictionary: Dictionary) -> None:
    lines = [f"# {dictionary.n_samples},{dictionary.n_atoms}"]
    for v in dictionary.columns.ravel():
        lines.append(f"{format_float(v.real)},{format_float(v.imag)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def _read_numeric_rows(path, width: int) -> list[tuple[float, ...]]:
    out = []
    with open(path, newline="") as handle:
        for row in csv.reader(handle):
            if not row or row[0].startswith("#"):
                continue
            try:
                values = tuple(float(v) for v in row[:width])
            except ValueError:
                continue  # header row
            if len(values) == width:
                out.append(values)
    if not out:
        raise ValueError(f"no numeric rows found in {path}")
    return out


def scenario_from_dict(payload: dict) -> Scenario:
    """Build a Scenario from its JSON representation.

    Expected keys: n_samples, n_grid, components (list of objects with
    frequency/magnitude/phase), and optionally min_separation, snr_db
    (number or list), trials, seed, trim and solver (list of objects with
    r/q/noise_mode/rel_tolerance/max_iterations/prune_threshold).
    """
    components = tuple(
        Component(
            frequency=c.get("frequency"),
            magnitude=c.get("magnitude", 1.0),
            phase=c.get("phase", "random"),
        )
        for c in payload["components"]
    )
    solver_entries = payload.get("solver", [{}])
    configs = tuple(
        SpiceConfig(
            r=entry.get("r", 1.0),
            q=entry.get("q", 2.0),
            noise_mode=entry.get("noise_mode", "uniform"),
            rel_tolerance=entry.get("rel_tolerance", 1e-6),
            max_iterations=entry.get("max_iterations", 5000),
            prune_threshold=entry.get("prune_threshold", 1e-12),
        )
        for entry in solver_entries
    )
    snr = payload.get("snr_db", 10.0)
    return Scenario(
        n_samples=int(payload["n_samples"]),
        n_grid=int(payload["n_grid"]),
        components=components,
        min_separation=float(payload.get("min_separation", 0.0)),
        snr_db=tuple(np.atleast_1d(snr).astype(float)),
        trials=int(payload.get("trials", 1)),
        seed=int(payload.get("seed", 0)),
        solver=configs,
        trim=int(payload.get("trim", 0)),
    )


def load_scenario_json(path) -> Scenario:
    with open(path) as handle:
        payload = json.load(handle)
    return scenario_from_dict(payload)


def write_estimate_csv(path, state, x_hat: np.ndarray, grid_frequencies) -> None:
    """Sparse estimate rows: index, frequency, p, |x|, arg(x).

    Only atoms with positive power are written; ``index`` is the 0-based
    grid index.
    """
    freqs = (
        np.asarray(grid_frequencies, dtype=float)
        if grid_frequencies is not None
        else (np.arange(1, x_hat.size + 1) / x_hat.size)
    )
    lines = ["index,frequency,p,abs_x,arg_x"]
    for k in np.flatnonzero(state.p > 0.0):
        lines.append(
            f"{k},{format_float(freqs[k])},{format_float(state.p[k])},"
            f"{format_float(abs(x_hat[k]))},{format_float(float(np.angle(x_hat[k])))}"
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_trace_csv(path, trace: SolverTrace) -> None:
    """Iteration log: iter, objective, lambda, active_set, rel_change."""
    lines = ["iter,objective,lambda,active_set,rel_change"]
    for i in range(len(trace)):
        lines.append(
            f"{i},{format_float(trace.objective[i])},{format_float(trace.lam[i])},"
            f"{trace.active_size[i]},{format_float(trace.rel_change[i])}"
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_results_csv(path, rows: list[ResultRow]) -> None:
    """Sweep results with exactly the ResultRow columns."""
    lines = [",".join(ResultRow.FIELDS)]
    for row in rows:
        values = []
        for name in ResultRow.FIELDS:
            value = getattr(row, name)
            values.append(str(value) if name == "excluded_trials" else format_float(value))
        lines.append(",".join(values))
    atomic_write_text(path, "\n".join(lines) + "\n")
