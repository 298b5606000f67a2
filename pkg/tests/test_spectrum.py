import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import rqspice as rq
from rqspice import Signal
from rqspice.spectrum import circular_distance, pick_peaks, match_support, rmse_frequencies


class TestPickPeaks:
    def test_single_nonzero_element(self):
        x = np.zeros(10, complex)
        x[4] = 2.0
        est = pick_peaks(x, 0.2)
        assert est.support == (4,)
        assert est.model_order == 1
        assert est.peaks[0].magnitude == pytest.approx(2.0)

    def test_threshold_arithmetic(self):
        # magnitudes 1.0, 0.25, 0.1 on separated bins: 0.25 >= 0.2 stays,
        # 0.1 < 0.2 goes
        x = np.zeros(9, complex)
        x[0] = 1.0
        x[3] = 0.25
        x[6] = 0.1
        est = pick_peaks(x, 0.2)
        assert est.support == (0, 3)

    def test_adjacent_bins_merge_at_the_maximum(self):
        x = np.zeros(8, complex)
        x[3] = 0.9
        x[4] = 1.0
        est = pick_peaks(x, 0.2)
        assert est.support == (4,)
        assert est.model_order == 1

    def test_wraparound_run_merges(self):
        x = np.zeros(8, complex)
        x[7] = 0.9
        x[0] = 1.0
        est = pick_peaks(x, 0.2)
        assert est.support == (0,)

    def test_all_zero_gives_empty_estimate(self):
        est = pick_peaks(np.zeros(5, complex), 0.2)
        assert est.model_order == 0
        assert est.peaks == ()

    def test_frequencies_follow_grid(self):
        grid = np.arange(1, 7) / 6
        x = np.zeros(6, complex)
        x[2] = 1.0
        est = pick_peaks(x, 0.2, grid)
        assert est.peaks[0].frequency == pytest.approx(0.5)

    @settings(max_examples=40, deadline=None)
    @given(
        st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=3, max_size=40),
        st.floats(min_value=0.05, max_value=0.5),
        st.floats(min_value=0.05, max_value=0.49),
    )
    def test_threshold_monotonicity(self, mags, low, step):
        x = np.asarray(mags, dtype=complex)
        if not np.abs(x).max():
            return
        high = min(low + step, 1.0)
        order_low = pick_peaks(x, low).model_order
        order_high = pick_peaks(x, high).model_order
        assert order_high <= order_low


class TestMatchSupport:
    def grid_est(self, freqs, mags=None):
        m = 1000
        x = np.zeros(m, complex)
        for i, f in enumerate(freqs):
            k = int(round(f * m)) - 1
            x[k] = 1.0 if mags is None else mags[i]
        return pick_peaks(x, 0.2, np.arange(1, m + 1) / m)

    def test_exact_match(self):
        est = self.grid_est([0.1, 0.2, 0.3])
        assert match_support(est, [0.1, 0.2, 0.3], 2, 1e-3)

    def test_three_grid_steps_away_fails(self):
        est = self.grid_est([0.103, 0.2, 0.3])
        assert not match_support(est, [0.1, 0.2, 0.3], 2, 1e-3)

    def test_wraparound_distance(self):
        est = self.grid_est([0.999])
        assert match_support(est, [0.001], 2, 1e-3)

    def test_wrong_model_order_fails(self):
        est = self.grid_est([0.1, 0.2])
        assert not match_support(est, [0.1, 0.2, 0.3], 2, 1e-3)

    @settings(max_examples=30, deadline=None)
    @given(st.permutations([0.11, 0.27, 0.55]))
    def test_permutation_symmetric(self, trues):
        est = self.grid_est([0.11, 0.27, 0.55])
        assert match_support(est, trues, 2, 1e-3)


class TestRmseFrequencies:
    def grid_est(self, pairs):
        m = 1000
        x = np.zeros(m, complex)
        for f, mag in pairs:
            x[int(round(f * m)) - 1] = mag
        return pick_peaks(x, 0.05, np.arange(1, m + 1) / m)

    def test_perfect_estimate_gives_zero(self):
        est = self.grid_est([(0.1, 1.0), (0.3, 1.0)])
        assert rmse_frequencies(est, [0.1, 0.3]) == pytest.approx(0.0)

    def test_single_component_error(self):
        est = self.grid_est([(0.102, 1.0)])
        assert rmse_frequencies(est, [0.1]) == pytest.approx(0.002, rel=1e-9)

    def test_extra_peaks_use_largest(self):
        # five peaks against four true components: the four largest win
        est = self.grid_est(
            [(0.1, 1.0), (0.2, 0.9), (0.3, 0.8), (0.4, 0.7), (0.7, 0.1)]
        )
        true = [0.1, 0.2, 0.3, 0.4]
        assert rmse_frequencies(est, true) == pytest.approx(0.0, abs=1e-12)

    def test_too_few_peaks_excluded(self):
        est = self.grid_est([(0.1, 1.0)])
        assert rmse_frequencies(est, [0.1, 0.2]) is None

    def test_empty_estimate_excluded(self):
        est = pick_peaks(np.zeros(10, complex), 0.2)
        assert rmse_frequencies(est, [0.1]) is None


class TestRefitAmplitudes:
    def test_noiseless_single_atom(self):
        d = rq.build_sinusoid_dictionary(16, 32)
        y = Signal(2.0 * d.columns[:, 5])
        coef = rq.refit_amplitudes(y, d, [5])
        assert coef[0] == pytest.approx(2.0, rel=1e-12)

    def test_orthogonal_atoms_are_independent_projections(self):
        n = 8
        dft = np.exp(2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n)
        d = rq.Dictionary(columns=dft)
        rng = np.random.default_rng(0)
        y = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        coef = rq.refit_amplitudes(Signal(y), d, [2, 5])
        for pos, k in enumerate([2, 5]):
            proj = np.vdot(dft[:, k], y) / n
            assert coef[pos] == pytest.approx(proj, rel=1e-12)

    def test_residual_orthogonal_to_support(self):
        rng = np.random.default_rng(1)
        n, m = 10, 20
        cols = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
        d = rq.Dictionary(columns=cols)
        y = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        support = [1, 7, 13]
        coef = rq.refit_amplitudes(Signal(y), d, support)
        residual = y - cols[:, support] @ coef
        assert np.abs(cols[:, support].conj().T @ residual).max() <= 1e-10

    def test_refit_never_increases_residual(self):
        from rqspice.equivalence import gaussian_instance

        signal, dictionary, _ = gaussian_instance(16, 32, seed=8, trial=3)
        config = rq.SpiceConfig(q=2.0, noise_mode="uniform", rel_tolerance=1e-9,
                                max_iterations=50000)
        state, _ = rq.solve(signal, dictionary, config)
        x_hat = rq.amplitudes_from_powers(state, dictionary, signal)
        est = pick_peaks(x_hat, 0.2)
        support = list(est.support)
        coef = rq.refit_amplitudes(signal, dictionary, support)
        refit_res = signal.samples - dictionary.columns[:, support] @ coef
        sparse = np.zeros_like(x_hat)
        sparse[support] = x_hat[support]
        sparse_res = signal.samples - dictionary.columns @ sparse
        assert np.linalg.norm(refit_res) <= np.linalg.norm(sparse_res) + 1e-12

    def test_rank_deficient_support_rejected(self):
        cols = np.ones((4, 2), dtype=complex)  # duplicated atom
        d = rq.Dictionary(columns=cols)
        with pytest.raises(np.linalg.LinAlgError):
            rq.refit_amplitudes(Signal(np.ones(4)), d, [0, 1])

    def test_oversized_support_rejected(self):
        d = rq.build_sinusoid_dictionary(4, 8)
        with pytest.raises(ValueError):
            rq.refit_amplitudes(Signal(np.ones(4)), d, [0, 1, 2, 3, 4])


class TestCircularDistance:
    def test_wraps(self):
        assert circular_distance(0.999, 0.001) == pytest.approx(0.002)

    @settings(max_examples=50, deadline=None)
    @given(
        st.floats(min_value=1e-6, max_value=1.0),
        st.floats(min_value=1e-6, max_value=1.0),
    )
    def test_symmetric_and_bounded(self, f1, f2):
        d12 = float(circular_distance(f1, f2))
        d21 = float(circular_distance(f2, f1))
        assert d12 == pytest.approx(d21, abs=1e-15)
        assert 0.0 <= d12 <= 0.5 + 1e-12
