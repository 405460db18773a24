import numpy as np
import pytest
from numpy.testing import assert_allclose

from floqlab.driver import run_stroboscopic
from floqlab.hamiltonians import DisorderRealization, FloquetConfig
from floqlab.observables import (
    TimeSeriesRecord,
    extract_lifetime,
    log_decimate_indices,
    magnetization_spectrum,
    spectral_peaks,
    spin_glass_order,
    staggered,
)
from floqlab.statevector import from_bitstring


class TestSpinGlassOrder:
    def test_fully_polarized_is_extensive(self):
        assert spin_glass_order(np.ones((10, 10))) == pytest.approx(10.0)

    def test_uncorrelated_floor(self):
        assert spin_glass_order(np.eye(7)) == pytest.approx(1.0)

    def test_hand_evaluated_example(self):
        c = np.full((3, 3), 0.5)
        np.fill_diagonal(c, 1.0)
        assert spin_glass_order(c) == pytest.approx(1.5)

    def test_range(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            z = rng.uniform(-1, 1, 6)
            c = np.outer(z, z)
            np.fill_diagonal(c, 1.0)
            chi = spin_glass_order(c)
            assert 1.0 <= chi <= 6.0

    def test_rejects_malformed(self):
        with pytest.raises(ValueError):
            spin_glass_order(np.ones((2, 3)))
        bad = np.ones((3, 3))
        bad[0, 1] = 2.0
        bad[1, 0] = 2.0
        with pytest.raises(ValueError):
            spin_glass_order(bad)
        asym = np.eye(3)
        asym[0, 1] = 0.5
        with pytest.raises(ValueError):
            spin_glass_order(asym)


class TestStaggered:
    def test_alternating_series_flattens(self):
        m = np.array([1.0, -1.0, 1.0, -1.0])
        assert_allclose(staggered(m), 1.0)


class TestSpectrum:
    def test_alternating_series_peaks_at_half(self):
        m = (-1.0) ** np.arange(100)
        spec = magnetization_spectrum(m)
        assert spec.peak_frequency == pytest.approx(0.5)

    def test_constant_series_is_dc(self):
        spec = magnetization_spectrum(np.ones(64))
        assert spec.peak_frequency == 0.0

    def test_padding_and_bin_count(self):
        spec = magnetization_spectrum(np.ones(100))
        assert spec.n_padded == 512        # next power of two >= 400
        assert len(spec.magnitude) == spec.n_padded // 2 + 1
        assert np.all(spec.magnitude >= 0.0)

    def test_parseval(self):
        rng = np.random.default_rng(5)
        m = rng.normal(size=100)
        spec = magnetization_spectrum(m)
        power_time = np.sum(m**2)
        mags = spec.magnitude**2
        power_freq = (mags[0] + 2 * mags[1:-1].sum() + mags[-1]) / spec.n_padded
        assert power_freq == pytest.approx(power_time, rel=1e-8)

    def test_complete_period_subsampling(self):
        m = (-1.0) ** np.arange(100)
        spec = magnetization_spectrum(m, use_half_periods=False)
        assert spec.n_samples == 50
        assert spec.peak_frequency == 0.0   # alternation invisible at full periods

    def test_too_short(self):
        with pytest.raises(ValueError):
            magnetization_spectrum(np.ones(7))

    def test_spectral_peaks_on_synthetic_splitting(self):
        # a pure beat folds both satellites 0.5 +- delta onto 0.5 - delta
        n = np.arange(200)
        m = (-1.0) ** n * np.cos(2 * np.pi * 0.05 * n)
        peaks = spectral_peaks(magnetization_spectrum(m), rel_height=0.25)
        assert_allclose(peaks, [0.45], atol=0.01)
        # an unbeaten component restores the centre line next to the satellite
        m = (-1.0) ** n * (0.5 + 0.5 * np.cos(2 * np.pi * 0.05 * n))
        peaks = spectral_peaks(magnetization_spectrum(m), rel_height=0.25)
        assert len(peaks) == 2
        assert_allclose(sorted(peaks), [0.45, 0.5], atol=0.01)


class TestExtractLifetime:
    def test_undamped_series_never_decays(self):
        m = (-1.0) ** np.arange(500)
        assert extract_lifetime(m) == 500

    def test_synthetic_exponential_against_analytic_crossing(self):
        tau = 500.0
        n = np.arange(6000)
        m = (-1.0) ** n * np.exp(-n / tau)
        # analytic: RMS over the trailing window crosses 0.1x the first window
        # when exp(-(k - 63)/tau) = 0.1, i.e. k = 63 + tau ln 10
        expected = 63 + tau * np.log(10.0)
        got = extract_lifetime(m, window=64, threshold=0.1)
        assert abs(got - expected) <= 0.1 * expected

    def test_scale_invariance(self):
        rng = np.random.default_rng(3)
        n = np.arange(3000)
        m = (-1.0) ** n * np.exp(-n / 300.0) * (1 + 0.05 * rng.normal(size=n.size))
        assert extract_lifetime(m) == extract_lifetime(7.3 * m)

    def test_non_alternating_mode_for_order_parameter(self):
        n = np.arange(3000)
        chi_minus_one = 5.0 * np.exp(-n / 200.0)
        life = extract_lifetime(chi_minus_one, alternating=False)
        expected = 63 + 200.0 * np.log(10.0)
        assert abs(life - expected) <= 0.1 * expected

    def test_short_series_rejected(self):
        with pytest.raises(ValueError):
            extract_lifetime(np.ones(32), window=64)


class TestLogDecimation:
    def test_keeps_required_indices(self):
        idx = log_decimate_indices(100_000)
        assert idx[0] == 0 and 1 in idx and idx[-1] == 99_999
        assert len(idx) < 2000

    def test_small_series_untouched(self):
        assert_allclose(log_decimate_indices(2), [0, 1])


class TestRecordValidation:
    def test_m_must_match_site_mean(self):
        with pytest.raises(ValueError):
            TimeSeriesRecord(times=np.zeros(1), site_z=np.ones((1, 4)),
                             m=np.array([0.5]), chi_sg=np.array([4.0]))

    def test_chi_must_match_correlators(self):
        corr = np.ones((1, 3, 3))
        with pytest.raises(ValueError):
            TimeSeriesRecord(times=np.zeros(1), site_z=np.ones((1, 3)),
                             m=np.ones(1), chi_sg=np.array([2.0]), correlators=corr)


class TestPerSiteSplitPeaks:
    def test_disorder_splits_some_site_spectra(self):
        # a perturbed, non-interacting run develops beat structure on sites
        # whose disorder phase is far from an echo condition
        cfg = FloquetConfig(chain_length=10, epsilon=0.1, interaction_kind="off")
        real = DisorderRealization.draw(10, seed=20)
        rec = run_stroboscopic(cfg, real, from_bitstring("0" * 10), 100,
                               store_correlators=False)
        n_split = 0
        for i in range(10):
            spec = magnetization_spectrum(rec.site_z[:, i])
            if len(spectral_peaks(spec, rel_height=0.25)) >= 2:
                n_split += 1
        assert n_split > 0
        assert n_split < 10   # echo-protected sites keep a single peak
