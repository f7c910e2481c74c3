"""
Tests for the von Mises complex-P sampler
"""

import pytest
import json
import math
import sys
import os
from pathlib import Path

import numpy as np
from scipy.special import i0, iv

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import vcp_sampler
from vcp_sampler import (
    VcpConfig,
    draw_sample,
    estimate_correlation,
    log_weight_magnitude,
    mode_weights,
    sample_von_mises,
)
from exact_oracle import fock_correlation, max_order_rate
from networks import UnitaryMatrix, PhaseProfile, build_fourier, build_qufti
from services.validation import (
    InvalidDimensionError,
    InvalidSpecError,
    ValidationError,
)


def load_fixture(filename):
    """Load test fixture"""
    fixture_path = Path(__file__).parent / 'fixtures' / filename
    with open(fixture_path, 'r') as f:
        return json.load(f)


class TestVonMises:
    """Test the Best-Fisher angle sampler"""

    def test_range(self):
        """Angles lie in [-pi, pi)"""
        angles = sample_von_mises(0.5, np.random.default_rng(1), 10_000)
        assert angles.min() >= -np.pi
        assert angles.max() < np.pi

    def test_scalar_draw(self):
        """size=None returns a float"""
        assert isinstance(sample_von_mises(1.0, np.random.default_rng(2)), float)

    def test_shape(self):
        """A tuple size gives that shape"""
        assert sample_von_mises(1.0, np.random.default_rng(3), (4, 5)).shape == (4, 5)

    def test_zero_kappa_is_uniform(self):
        """kappa=0 passes a KS test against the uniform law"""
        from scipy.stats import kstest
        angles = sample_von_mises(0.0, np.random.default_rng(4), 100_000)
        assert kstest(angles, 'uniform', args=(-np.pi, 2 * np.pi)).pvalue > 0.01

    def test_moments(self):
        """E[cos theta] and E[cos 2 theta] match the Bessel ratios"""
        for case in load_fixture('reference_values.json')['von_mises_moments']:
            kappa, draws = case['kappa'], case['draws']
            angles = sample_von_mises(kappa, np.random.default_rng(int(kappa * 100) + 5), draws)
            for order in (1, 2):
                values = np.cos(order * angles)
                expected = iv(order, kappa) / i0(kappa)
                assert abs(values.mean() - expected) <= 4 * values.std() / math.sqrt(draws)

    def test_circular_mean_near_zero(self):
        """kappa=4 has circular mean 0"""
        angles = sample_von_mises(4.0, np.random.default_rng(6), 100_000)
        sines = np.sin(angles)
        assert abs(sines.mean()) <= 4 * sines.std() / math.sqrt(angles.size)

    def test_negative_kappa(self):
        """Negative concentration is refused"""
        with pytest.raises(ValidationError):
            sample_von_mises(-1.0, np.random.default_rng(7))

    def test_deterministic(self):
        """Same stream gives the same angles"""
        a = sample_von_mises(0.01, np.random.default_rng(8), 1000)
        b = sample_von_mises(0.01, np.random.default_rng(8), 1000)
        assert np.array_equal(a, b)


class TestWeights:
    """Test the per-mode complex weights"""

    def test_forced_zero_theta(self):
        """theta=0 gives the real weight I0(r^2)/r^2"""
        cfg = VcpConfig(radius=0.5, occupancy=(1, 0, 1))
        weights = mode_weights(cfg, np.zeros(3))
        assert weights[0] == pytest.approx(i0(0.25) / 0.25, rel=1e-12)
        assert weights[0].imag == 0.0
        assert weights[1] == 1.0

    def test_small_radius_magnitude(self):
        """r=0.1 gives |Omega_k| close to 100.0025"""
        case = load_fixture('reference_values.json')['weight_magnitude']
        cfg = VcpConfig(radius=case['r'], occupancy=(1,))
        weight = mode_weights(cfg, np.array([0.7]))[0]
        assert abs(weight) == pytest.approx(case['expected'], rel=case['rel'])

    def test_log_magnitude_matches_product(self):
        """log_weight_magnitude is log |prod Omega_k|"""
        cfg = VcpConfig(radius=0.3, occupancy=(1, 1, 0, 1))
        theta = np.array([0.4, -1.2, 0.0, 2.5])
        product = np.prod(mode_weights(cfg, theta))
        assert log_weight_magnitude(cfg) == pytest.approx(math.log(abs(product)), rel=1e-12)

    def test_theta_length_checked(self):
        """theta must have one entry per mode"""
        cfg = VcpConfig(radius=0.3, occupancy=(1, 1))
        with pytest.raises(InvalidDimensionError):
            mode_weights(cfg, np.zeros(3))


class TestConfig:
    """Test sampler configuration"""

    def test_zero_radius(self):
        """r must be positive"""
        with pytest.raises(ValidationError):
            VcpConfig(radius=0.0, occupancy=(1,))

    def test_two_photons_refused(self):
        """Occupancy above one photon per mode is refused"""
        with pytest.raises(ValidationError):
            VcpConfig(radius=0.1, occupancy=(2, 0))

    def test_all_occupied(self):
        """all_occupied puts one photon in every mode"""
        cfg = VcpConfig.all_occupied(4, 0.1)
        assert cfg.occupancy == (1, 1, 1, 1)
        assert cfg.occupied == (0, 1, 2, 3)


class TestDrawSample:
    """Test single weighted samples"""

    def test_all_empty(self):
        """No photons gives zero amplitudes and unit weight"""
        sample = draw_sample(VcpConfig(radius=0.4, occupancy=(0, 0, 0)), np.random.default_rng(1))
        assert np.all(sample.alpha == 0)
        assert np.all(sample.beta == 0)
        assert sample.weight == 1.0

    def test_amplitude_moduli(self):
        """Occupied modes sit on the radius-r circle"""
        sample = draw_sample(VcpConfig(radius=0.4, occupancy=(1, 0, 1)), np.random.default_rng(2))
        assert np.allclose(np.abs(sample.alpha[[0, 2]]), 0.4)
        assert np.allclose(np.abs(sample.beta[[0, 2]]), 0.4)
        assert sample.alpha[1] == 0 and sample.beta[1] == 0

    def test_number_variable_carries_theta(self):
        """alpha_k beta_k = r^2 exp(i theta_k)"""
        sample = draw_sample(VcpConfig(radius=0.4, occupancy=(1, 1)), np.random.default_rng(3))
        assert np.allclose(sample.alpha * sample.beta, 0.16 * np.exp(1j * sample.theta))

    def test_weight_is_product(self):
        """Total weight is the product of the mode weights"""
        cfg = VcpConfig(radius=0.2, occupancy=(1, 1, 0))
        sample = draw_sample(cfg, np.random.default_rng(4))
        assert sample.weight == pytest.approx(complex(np.prod(mode_weights(cfg, sample.theta))))


class TestEstimateCorrelation:
    """Test correlation estimates against exact values"""

    def test_single_photon_identity(self):
        """One photon through [[1]] gives <n> = 1"""
        U = UnitaryMatrix(np.eye(1))
        result = estimate_correlation(U, VcpConfig(radius=0.1, occupancy=(1,)), [0], L1=20, L2=500, seed=1)
        assert abs(result.mean - 1.0) <= 4 * result.stderr + 1e-12
        assert result.method == 'vcp'
        assert result.samples == 10_000

    def test_hong_ou_mandel(self):
        """Two photons on a beam splitter never coincide"""
        U = build_fourier(2)
        cfg = VcpConfig.all_occupied(2, 0.1)
        result = estimate_correlation(U, cfg, [0, 1], L1=50, L2=2000, seed=2)
        assert abs(result.mean) <= 4 * result.stderr

    def test_low_order_matches_fock(self):
        """Third-order correlation at M=4 matches the Fock oracle"""
        V = build_qufti(4, PhaseProfile.noiseless(4, 0.2))
        cfg = VcpConfig.all_occupied(4, 0.8)
        exact = fock_correlation(V, range(4), [0, 1, 2])
        result = estimate_correlation(V, cfg, [0, 1, 2], L1=50, L2=4000, seed=3)
        assert abs(result.mean - exact) <= 4 * result.stderr

    def test_imaginary_diagnostic(self):
        """Imaginary part stays within 5 of its own errors"""
        V = build_qufti(3, PhaseProfile.noiseless(3, 0.1))
        result = estimate_correlation(V, VcpConfig.all_occupied(3, 0.3), [0, 1, 2], L1=40, L2=2000, seed=4)
        assert abs(result.imag_diagnostic) <= 5 * result.imag_stderr

    def test_decoupled_output_is_exactly_zero(self):
        """An output with no path from an occupied input gives 0 for every sample"""
        U = UnitaryMatrix(np.eye(3))
        cfg = VcpConfig(radius=0.5, occupancy=(1, 1, 0))
        result = estimate_correlation(U, cfg, [0, 2], L1=5, L2=100, seed=5)
        assert result.mean == 0.0
        assert result.stderr == 0.0

    def test_worker_count_does_not_change_result(self):
        """Same seed gives bit-identical results with 1 or 4 workers"""
        V = build_qufti(4, PhaseProfile.noiseless(4, 0.1))
        cfg = VcpConfig.all_occupied(4, 0.1)
        a = estimate_correlation(V, cfg, range(4), L1=8, L2=300, seed=6, workers=1)
        b = estimate_correlation(V, cfg, range(4), L1=8, L2=300, seed=6, workers=4)
        assert a.mean == b.mean
        assert a.stderr == b.stderr

    def test_empty_outputs(self):
        """An empty output set is an invalid spec"""
        with pytest.raises(InvalidSpecError):
            estimate_correlation(build_fourier(2), VcpConfig.all_occupied(2, 0.1), [], L1=2, L2=10, seed=1)

    def test_single_subensemble_refused(self):
        """L1 = 1 cannot give an error estimate"""
        with pytest.raises(InvalidSpecError):
            estimate_correlation(build_fourier(2), VcpConfig.all_occupied(2, 0.1), [0], L1=1, L2=10, seed=1)

    def test_occupancy_must_match_network(self):
        """Occupancy length must equal the mode count"""
        with pytest.raises(InvalidDimensionError):
            estimate_correlation(build_fourier(3), VcpConfig.all_occupied(2, 0.1), [0], L1=2, L2=10, seed=1)

    def test_large_network_does_not_overflow(self):
        """Maximum order at M=100 stays finite in the log domain"""
        V = build_qufti(100, PhaseProfile.noiseless(100, 0.007))
        result = estimate_correlation(V, VcpConfig.all_occupied(100, 0.1), range(100), L1=2, L2=50, seed=7)
        assert math.isfinite(result.mean)
        assert math.isfinite(result.stderr)

    def test_propagates_through_apply_network(self, monkeypatch):
        """Sample batches go through the shared propagation step"""
        calls = []
        real = vcp_sampler.apply_network

        def counting(network, alpha, beta):
            calls.append(alpha.shape)
            return real(network, alpha, beta)

        monkeypatch.setattr(vcp_sampler, 'apply_network', counting)
        V = build_qufti(4, PhaseProfile.noiseless(4, 0.2))
        estimate_correlation(V, VcpConfig.all_occupied(4, 0.8), [0, 1], L1=3, L2=50, seed=8)
        assert calls
        assert all(shape[1] == 4 for shape in calls)


class TestStatistics:
    """Test error scaling and bias over many seeds"""

    def test_four_times_samples_halves_error(self):
        """Median stderr over 20 seeds halves when L2 grows fourfold"""
        V = build_qufti(3, PhaseProfile.noiseless(3, 0.1))
        cfg = VcpConfig.all_occupied(3, 0.5)
        small = [estimate_correlation(V, cfg, range(3), L1=20, L2=200, seed=s).stderr for s in range(20)]
        large = [estimate_correlation(V, cfg, range(3), L1=20, L2=800, seed=s).stderr for s in range(20)]
        ratio = np.median(small) / np.median(large)
        assert 1.6 < ratio < 2.5

    def test_unbiased_over_seeds(self):
        """At least 38 of 40 seeds land within 5 errors of the exact rate"""
        V = build_qufti(3, PhaseProfile.noiseless(3, 0.3))
        exact = max_order_rate(V, range(3), range(3))
        cfg = VcpConfig.all_occupied(3, 0.5)
        hits = 0
        for seed in range(40):
            result = estimate_correlation(V, cfg, range(3), L1=20, L2=500, seed=seed)
            hits += abs(result.mean - exact) <= 5 * result.stderr
        assert hits >= 38

    def test_low_order_unbiased_over_seeds(self):
        """Second-order correlations at M=4 stay unbiased over 40 seeds"""
        V = build_qufti(4, PhaseProfile.noiseless(4, 0.25))
        exact = fock_correlation(V, range(4), [0, 1])
        cfg = VcpConfig.all_occupied(4, 0.8)
        hits = 0
        for seed in range(40):
            result = estimate_correlation(V, cfg, [0, 1], L1=20, L2=500, seed=seed)
            hits += abs(result.mean - exact) <= 5 * result.stderr
        assert hits >= 38
