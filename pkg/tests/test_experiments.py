"""
Tests for fringe scans, noise sweeps and error baselines
"""

import pytest
import math
import sys
import os
from dataclasses import replace

import numpy as np
import pandas as pd

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import experiments
from experiments import (
    CSV_COLUMNS,
    NOISE_KEY,
    ScanSpec,
    _noise_seed,
    _task_seed,
    combine_results,
    error_comparison,
    fringe_half_width,
    fringe_scan,
    noise_sweep,
    normalize_fringe,
    r_sweep,
    run_estimator,
    shot_noise_baseline,
)
from exact_oracle import fock_correlation, max_order_rate, q_conjecture
from networks import PhaseProfile, build_qufti
from services.validation import InvalidSpecError, MaxOrderOnlyError
from utils.helpers import derive_rng, symmetric_grid


def without_timing(frame):
    return frame.drop(columns=['wall_time_s'])


class TestScanSpec:
    """Test spec resolution and validation"""

    def test_defaults_resolved(self):
        """None fields pick up config defaults"""
        spec = ScanSpec(M=5, phi_grid=[0.0, 0.1], method='qcp')
        assert spec.N == 5
        assert spec.d == 2
        assert spec.r == 0.1
        assert (spec.L1, spec.L2) == (200, 10000)
        assert spec.realizations == 1
        assert spec.outputs == (0, 1, 2, 3, 4)
        assert spec.phi_grid == (0.0, 0.1)

    def test_low_order_radius(self):
        """N < M defaults to the low-order radius"""
        assert ScanSpec(M=5, phi_grid=[0.0], method='vcp', order=3).r == 0.8

    def test_noisy_default_realizations(self):
        """A noisy scan averages the configured number of realizations"""
        spec = ScanSpec(M=3, phi_grid=[0.0], method='exact', noise_sigma=0.1)
        assert spec.realizations == 20

    def test_method_case_insensitive(self):
        """Method names are normalised to lower case"""
        assert ScanSpec(M=3, phi_grid=[0.0], method='QCP').method == 'qcp'

    def test_unknown_method(self):
        """Unknown methods are an invalid spec"""
        with pytest.raises(InvalidSpecError):
            ScanSpec(M=3, phi_grid=[0.0], method='glynn')

    def test_qcp_max_order_only(self):
        """QCP below maximum order is refused"""
        with pytest.raises(MaxOrderOnlyError):
            ScanSpec(M=5, phi_grid=[0.0], method='qcp', order=4)

    def test_conjecture_needs_noiseless_max_order(self):
        """The analytic rate covers only the noiseless maximum order"""
        with pytest.raises(InvalidSpecError):
            ScanSpec(M=5, phi_grid=[0.0], method='conjecture', order=3)
        with pytest.raises(InvalidSpecError):
            ScanSpec(M=5, phi_grid=[0.0], method='conjecture', noise_sigma=0.1)
        with pytest.raises(InvalidSpecError):
            ScanSpec(M=1, phi_grid=[0.0], method='conjecture')

    def test_order_above_modes(self):
        """N > M is refused"""
        with pytest.raises(InvalidSpecError):
            ScanSpec(M=3, phi_grid=[0.0], method='exact', order=4)

    def test_outputs_must_match_order(self):
        """Explicit outputs must have N entries"""
        with pytest.raises(InvalidSpecError):
            ScanSpec(M=4, phi_grid=[0.0], method='vcp', order=3, outputs=(0, 1))

    def test_outputs_set_order(self):
        """Outputs alone fix the order"""
        spec = ScanSpec(M=4, phi_grid=[0.0], method='vcp', outputs=(3, 1))
        assert spec.N == 2

    def test_sampled_needs_two_subensembles(self):
        """L1 = 1 is refused for sampled methods only"""
        with pytest.raises(InvalidSpecError):
            ScanSpec(M=3, phi_grid=[0.0], method='vcp', L1=1, L2=10)
        assert ScanSpec(M=3, phi_grid=[0.0], method='exact', L1=1, L2=1).L1 == 1

    def test_empty_grid(self):
        """An empty grid is refused"""
        with pytest.raises(InvalidSpecError):
            ScanSpec(M=3, phi_grid=[], method='exact')

    def test_to_dict(self):
        """to_dict uses lists for the grid and outputs"""
        config = ScanSpec(M=3, phi_grid=(0.0, 0.2), method='exact').to_dict()
        assert config['phi_grid'] == [0.0, 0.2]
        assert config['outputs'] == [0, 1, 2]
        assert config['method'] == 'exact'


class TestFringeScan:
    """Test single fringe scans"""

    def test_conjecture_peak(self):
        """Q(0) = 1 at M=100 with zero error"""
        result = fringe_scan(ScanSpec(M=100, phi_grid=[0.0], method='conjecture'))
        assert list(result.rows.columns[:len(CSV_COLUMNS)]) == CSV_COLUMNS
        row = result.rows.iloc[0]
        assert row['Q_mean'] == 1.0
        assert row['Q_stderr'] == 0.0
        assert row['Q_normalized'] == 1.0

    def test_exact_matches_conjecture(self):
        """Ryser fringe at M=6 agrees with the analytic rate"""
        grid = symmetric_grid(0.5, 8)
        result = fringe_scan(ScanSpec(M=6, phi_grid=grid, method='exact'))
        for _, row in result.rows.iterrows():
            assert row['Q_mean'] == pytest.approx(q_conjecture(6, row['phi']), rel=1e-9, abs=1e-12)

    def test_qcp_matches_conjecture(self):
        """QCP at M=6 stays within 4 errors of the analytic rate on a 10-point grid"""
        grid = np.linspace(0.05, 0.5, 10)
        result = fringe_scan(ScanSpec(M=6, phi_grid=grid, method='qcp', L1=50, L2=2000, seed=11))
        for _, row in result.rows.iterrows():
            assert abs(row['Q_mean'] - q_conjecture(6, row['phi'])) <= 4 * row['Q_stderr'] + 1e-12

    def test_vcp_low_order(self):
        """VCP third-order correlation at M=4 matches the Fock oracle"""
        spec = ScanSpec(M=4, phi_grid=[0.2], method='vcp', order=3, r=0.8, L1=50, L2=4000, seed=3)
        row = fringe_scan(spec).rows.iloc[0]
        V = build_qufti(4, PhaseProfile.noiseless(4, 0.2))
        exact = fock_correlation(V, range(4), [0, 1, 2])
        assert abs(row['Q_mean'] - exact) <= 4 * row['Q_stderr']

    def test_exact_low_order_at_identity(self):
        """phi=0 leaves one photon per mode, so every order gives 1"""
        for order in (6, 5, 4):
            result = fringe_scan(ScanSpec(M=6, phi_grid=[-0.1, 0.0, 0.1], method='exact', order=order))
            assert result.peak()['Q_mean'] == pytest.approx(1.0, abs=1e-9)
            assert result.peak()['phi'] == 0.0

    def test_workers_do_not_change_rows(self):
        """1 and 3 workers give identical rows"""
        spec = ScanSpec(M=4, phi_grid=[-0.2, 0.0, 0.2], method='qcp', L1=4, L2=50, seed=5)
        a = fringe_scan(spec, workers=1)
        b = fringe_scan(spec, workers=3)
        pd.testing.assert_frame_equal(without_timing(a.rows), without_timing(b.rows))

    def test_row_can_be_rerun(self):
        """A row's task seed reproduces its value on its own"""
        spec = ScanSpec(M=4, phi_grid=[0.1, 0.3], method='vcp', L1=4, L2=100, seed=8)
        result = fringe_scan(spec)
        realization = result.realizations.iloc[1]
        seed = _task_seed(spec.seed, spec.noise_sigma, realization['phi'], 0)
        assert realization['task_seed'] == seed
        rerun = run_estimator(spec, realization['phi'], 0)
        assert rerun.mean == result.rows.iloc[1]['Q_mean']

    def test_noisy_realizations(self):
        """Each grid point averages R realizations"""
        spec = ScanSpec(M=4, phi_grid=[0.0, 0.2], method='exact', noise_sigma=0.1, realizations=3, seed=2)
        result = fringe_scan(spec)
        assert len(result.realizations) == 6
        first = result.realizations[result.realizations['phi'] == 0.0]['Q_mean']
        assert result.rows.iloc[0]['Q_mean'] == pytest.approx(first.mean(), rel=1e-12)
        assert result.rows.iloc[0]['Q_stderr'] == pytest.approx(math.sqrt(first.var(ddof=0) / 3), rel=1e-9)

    def test_realization_shared_across_grid(self):
        """A realization uses the same noise offsets at every phi"""
        spec = ScanSpec(M=4, phi_grid=[0.0, 0.15, 0.3], method='exact', noise_sigma=0.2, realizations=2, seed=4)
        result = fringe_scan(spec)
        for realization in range(2):
            rng_seed = _noise_seed(spec.seed, spec.noise_sigma, realization)
            offsets = derive_rng(rng_seed, NOISE_KEY).normal(0.0, 0.2, size=4)
            values = result.realizations[result.realizations['realization'] == realization]
            for _, row in values.iterrows():
                profile = PhaseProfile(gradient=row['phi'], noise_sigma=0.2, offsets=tuple(offsets))
                V = build_qufti(4, profile)
                assert row['Q_mean'] == pytest.approx(max_order_rate(V, range(4), range(4)), rel=1e-12)

    def test_realizations_differ(self):
        """Different realization indices draw different offsets"""
        assert _noise_seed(3, 0.1, 0) != _noise_seed(3, 0.1, 1)
        assert _noise_seed(3, 0.1, 0) != _noise_seed(3, 0.2, 0)

    def test_single_point_hands_workers_to_sampler(self, monkeypatch):
        """With fewer tasks than workers the sampler gets the spare pool"""
        seen = []
        real = experiments.estimate_perm_squared

        def recording(network, cfg, L1, L2, seed, workers=1):
            seen.append(workers)
            return real(network, cfg, L1, L2, seed, workers)

        monkeypatch.setattr(experiments, 'estimate_perm_squared', recording)
        spec = ScanSpec(M=3, phi_grid=[0.1], method='qcp', L1=6, L2=50, seed=2)
        pooled = fringe_scan(spec, workers=4)
        assert seen == [4]
        seen.clear()
        fringe_scan(replace(spec, phi_grid=(0.1, 0.2)), workers=4)
        assert seen == [2, 2]
        single = fringe_scan(spec, workers=1)
        pd.testing.assert_frame_equal(without_timing(pooled.rows), without_timing(single.rows))

    def test_unused_parameters_blank(self):
        """d is only set for QCP rows, r for VCP rows, L1 and L2 for sampled rows"""
        qcp = fringe_scan(ScanSpec(M=3, phi_grid=[0.1], method='qcp', L1=2, L2=10)).rows.iloc[0]
        vcp = fringe_scan(ScanSpec(M=3, phi_grid=[0.1], method='vcp', L1=2, L2=10)).rows.iloc[0]
        exact = fringe_scan(ScanSpec(M=3, phi_grid=[0.1], method='exact')).rows.iloc[0]
        assert qcp['d'] == 2 and math.isnan(qcp['r'])
        assert vcp['r'] == pytest.approx(0.1) and math.isnan(vcp['d'])
        assert (vcp['L1'], vcp['L2']) == (2, 10)
        assert all(math.isnan(exact[column]) for column in ('d', 'r', 'L1', 'L2'))


class TestMethodAgreement:
    """Test that every method estimates the same rate"""

    def test_pairwise_within_errors(self):
        """VCP, QCP, exact and conjecture agree pairwise within 5 errors at M=4"""
        grid = [0.0, 0.15, 0.4]
        results = {
            method: fringe_scan(ScanSpec(M=4, phi_grid=grid, method=method, L1=50, L2=2000, seed=12)).rows
            for method in ('vcp', 'qcp', 'exact', 'conjecture')
        }
        methods = list(results)
        for i, first in enumerate(methods):
            for second in methods[i + 1:]:
                a, b = results[first], results[second]
                tolerance = 5 * np.sqrt(a['Q_stderr'] ** 2 + b['Q_stderr'] ** 2) + 1e-9
                assert ((a['Q_mean'] - b['Q_mean']).abs() <= tolerance).all(), (first, second)


class TestNoiseSweep:
    """Test sweeps over the phase-noise level"""

    def test_zero_noise_matches_fringe_scan(self):
        """sigma=0 in a sweep gives the plain scan"""
        spec = ScanSpec(M=4, phi_grid=[0.0, 0.1], method='qcp', L1=4, L2=100, seed=6, realizations=2)
        swept = noise_sweep(spec, [0.0])[0]
        plain = fringe_scan(replace(spec, noise_sigma=0.0))
        pd.testing.assert_frame_equal(without_timing(swept.rows), without_timing(plain.rows))

    def test_noise_lowers_exact_peak(self):
        """Phase noise pulls the exact peak below 1"""
        spec = ScanSpec(M=4, phi_grid=[0.0], method='exact', realizations=5, seed=9)
        clean, noisy = noise_sweep(spec, [0.0, 0.4])
        assert clean.rows.iloc[0]['Q_mean'] == pytest.approx(1.0, abs=1e-12)
        assert noisy.rows.iloc[0]['Q_mean'] < 1.0
        assert noisy.rows.iloc[0]['noise_sigma'] == 0.4

    def test_empty_levels(self):
        """At least one level is needed"""
        with pytest.raises(InvalidSpecError):
            noise_sweep(ScanSpec(M=3, phi_grid=[0.0], method='exact'), [])

    def test_combine(self):
        """Combined results stack rows in level order"""
        spec = ScanSpec(M=3, phi_grid=[0.0, 0.1], method='exact', realizations=2, seed=1)
        combined = combine_results(noise_sweep(spec, [0.0, 0.2]))
        assert len(combined.rows) == 4
        assert list(combined.rows['noise_sigma']) == [0.0, 0.0, 0.2, 0.2]

    def test_combine_nothing(self):
        """Combining no results is refused"""
        with pytest.raises(InvalidSpecError):
            combine_results([])


class TestFringeShape:
    """Test normalisation and half widths"""

    def test_normalize(self):
        """Values are divided by the value nearest phi=0"""
        rows = pd.DataFrame({'phi': [-0.1, 0.0, 0.1], 'Q_mean': [0.5, 2.0, 0.5]})
        assert list(normalize_fringe(rows)['Q_normalized']) == [0.25, 1.0, 0.25]

    def test_normalize_zero_peak(self):
        """A zero peak gives NaN"""
        rows = pd.DataFrame({'phi': [0.0, 0.1], 'Q_mean': [0.0, 0.5]})
        assert normalize_fringe(rows)['Q_normalized'].isna().all()

    def test_half_width_two_modes(self):
        """M=2 fringe cos^2(phi) reaches half height at pi/4"""
        result = fringe_scan(ScanSpec(M=2, phi_grid=symmetric_grid(1.0, 40), method='conjecture'))
        assert fringe_half_width(result) == pytest.approx(np.pi / 4, abs=1e-3)

    def test_half_width_not_reached(self):
        """A grid narrower than the fringe gives None"""
        result = fringe_scan(ScanSpec(M=2, phi_grid=symmetric_grid(0.1, 4), method='conjecture'))
        assert fringe_half_width(result) is None

    def test_half_width_narrows_with_modes(self):
        """More modes give a sharper fringe"""
        wide = fringe_scan(ScanSpec(M=3, phi_grid=symmetric_grid(1.0, 80), method='conjecture'))
        sharp = fringe_scan(ScanSpec(M=8, phi_grid=symmetric_grid(1.0, 80), method='conjecture'))
        assert fringe_half_width(sharp) < fringe_half_width(wide)


class TestBaselines:
    """Test radius sweeps and error comparisons"""

    def test_shot_noise(self):
        """sqrt(Q / (L1 L2)) at the peak and a dark fringe"""
        assert shot_noise_baseline(10, 0.0, 100, 100) == pytest.approx(0.01)
        assert shot_noise_baseline(2, np.pi / 2, 100, 100) == pytest.approx(0.0, abs=1e-9)

    def test_r_sweep_columns(self):
        """One row per radius with provenance columns"""
        table = r_sweep(M=4, phi=0.1, order=4, r_grid=[0.1, 0.5], L1=4, L2=100, seed=3)
        assert list(table['r']) == [0.1, 0.5]
        assert {'Q_mean', 'Q_stderr', 'Q_imag', 'seed'} <= set(table.columns)

    def test_r_sweep_deterministic(self):
        """Same seed gives the same sweep"""
        a = r_sweep(M=3, phi=0.2, order=3, r_grid=[0.2, 0.4], L1=4, L2=100, seed=4)
        b = r_sweep(M=3, phi=0.2, order=3, r_grid=[0.2, 0.4], L1=4, L2=100, seed=4, workers=2)
        pd.testing.assert_frame_equal(a, b)

    def test_r_sweep_errors(self):
        """Empty radius grids and mismatched outputs are refused"""
        with pytest.raises(InvalidSpecError):
            r_sweep(M=3, phi=0.2, order=3, r_grid=[], L1=4, L2=10, seed=1)
        with pytest.raises(InvalidSpecError):
            r_sweep(M=3, phi=0.2, order=2, r_grid=[0.5], L1=4, L2=10, seed=1, outputs=[0])

    def test_error_comparison(self):
        """Both estimators sit next to the analytic rate and shot noise"""
        table = error_comparison(M=4, phi_grid=[0.1, 0.3], r=0.1, d=2, L1=20, L2=500, seed=2)
        assert len(table) == 2
        for _, row in table.iterrows():
            assert row['Q_conj'] == pytest.approx(q_conjecture(4, row['phi']))
            assert row['shot_noise'] == pytest.approx(shot_noise_baseline(4, row['phi'], 20, 500))
            assert abs(row['qcp_mean'] - row['Q_conj']) <= 5 * row['qcp_stderr'] + 1e-12
