import json
import os

import numpy as np
import pytest

import rqspice as rq
from rqspice import Signal, SpiceState
from rqspice.io import (
    atomic_write_text,
    load_dictionary_csv,
    load_scenario_json,
    load_signal_csv,
    save_dictionary_csv,
    save_signal_csv,
    write_estimate_csv,
    write_results_csv,
    write_trace_csv,
)


SCENARIO = {
    "n_samples": 16,
    "n_grid": 64,
    "components": [
        {"frequency": 0.25, "magnitude": 1.0, "phase": "random"},
        {"magnitude": 0.5, "phase": 1.2},
    ],
    "min_separation": 0.01,
    "snr_db": [0.0, 10.0],
    "trials": 3,
    "seed": 11,
    "solver": [{"q": 2.0, "noise_mode": "uniform", "rel_tolerance": 1e-7}],
}


class TestSignalCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "sig.csv"
        rng = np.random.default_rng(0)
        signal = Signal(rng.standard_normal(9) + 1j * rng.standard_normal(9))
        save_signal_csv(path, signal)
        back = load_signal_csv(path)
        assert np.allclose(back.samples, signal.samples, rtol=1e-11)

    def test_header_tolerated(self, tmp_path):
        path = tmp_path / "sig.csv"
        path.write_text("real,imag\n1.0,0.5\n2.0,-0.5\n")
        back = load_signal_csv(path)
        assert np.allclose(back.samples, [1 + 0.5j, 2 - 0.5j])


class TestDictionaryCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "dict.csv"
        rng = np.random.default_rng(1)
        d = rq.Dictionary(
            columns=rng.standard_normal((5, 7)) + 1j * rng.standard_normal((5, 7))
        )
        save_dictionary_csv(path, d)
        back = load_dictionary_csv(path)
        assert back.columns.shape == (5, 7)
        assert np.allclose(back.columns, d.columns, rtol=1e-11)

    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / "dict.csv"
        path.write_text("1.0,0.0\n")
        with pytest.raises(ValueError):
            load_dictionary_csv(path)


class TestScenarioJson:
    def test_parse(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(SCENARIO))
        sc = load_scenario_json(path)
        assert sc.n_samples == 16
        assert sc.components[0].frequency == 0.25
        assert sc.components[1].frequency is None
        assert sc.snr_db == (0.0, 10.0)
        assert sc.solver[0].rel_tolerance == 1e-7

    def test_solver_defaults_applied(self, tmp_path):
        payload = dict(SCENARIO)
        payload.pop("solver")
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(payload))
        sc = load_scenario_json(path)
        assert sc.solver[0].q == 2.0


class TestWriters:
    def test_estimate_csv_rows_and_schema(self, tmp_path):
        path = tmp_path / "estimate.csv"
        p = np.array([0.0, 2.0, 0.0, 1.0])
        state = SpiceState(p=p, sigma=np.ones(3))
        x = np.array([0, 1 + 1j, 0, 2j])
        write_estimate_csv(path, state, x, np.arange(1, 5) / 4)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "index,frequency,p,abs_x,arg_x"
        assert len(lines) == 3  # only atoms with positive power
        first = lines[1].split(",")
        assert first[0] == "1"
        assert float(first[2]) == 2.0

    def test_trace_csv_schema(self, tmp_path):
        signal, dictionary, _ = rq.gaussian_instance(12, 24, seed=3, trial=0)
        _, trace = rq.solve(signal, dictionary, rq.SpiceConfig(q=2.0))
        path = tmp_path / "trace.csv"
        write_trace_csv(path, trace)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "iter,objective,lambda,active_set,rel_change"
        assert len(lines) == len(trace) + 1

    def test_results_csv_columns(self, tmp_path):
        row = rq.ResultRow(
            q=2.0, r=1.0, snr_db=10.0, support_probability=0.9,
            rmse=0.001, rmse_trimmed=0.001, excluded_trials=1, mean_runtime=0.5,
        )
        path = tmp_path / "results.csv"
        write_results_csv(path, [row])
        lines = path.read_text().strip().splitlines()
        assert lines[0] == (
            "q,r,snr_db,support_probability,rmse,rmse_trimmed,"
            "excluded_trials,mean_runtime"
        )
        assert lines[1].split(",")[6] == "1"


class TestAtomicWrite:
    def test_no_partial_file_on_failure(self, tmp_path, monkeypatch):
        target = tmp_path / "out.csv"

        def boom(src, dst):
            raise OSError("interrupted")

        monkeypatch.setattr(os, "replace", boom)
        with pytest.raises(OSError):
            atomic_write_text(target, "data")
        assert not target.exists()
        assert not list(tmp_path.glob("*.tmp"))

    def test_overwrites_atomically(self, tmp_path):
        target = tmp_path / "out.csv"
        atomic_write_text(target, "one")
        atomic_write_text(target, "two")
        assert target.read_text() == "two"
        assert not list(tmp_path.glob("*.tmp"))
