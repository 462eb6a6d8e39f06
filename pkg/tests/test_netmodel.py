"""Physical-layer sampling: unit conversions, fading moments, CSI error,
noise distributions, determinism."""

import numpy as np
import pytest
from scipy import stats

from semifl.errors import ConfigError
from semifl.netmodel import (NetworkConfig, NoiseModel, apply_csi_error,
                             dbm_to_watts, sample_channels, sample_noise)


class TestDbmToWatts:
    def test_definition_points(self):
        assert dbm_to_watts(30.0) == pytest.approx(1.0)
        assert dbm_to_watts(-80.0) == pytest.approx(1.0e-11)

    def test_23_dbm(self):
        # direct evaluation of 10**((23-30)/10)
        assert dbm_to_watts(23.0) == pytest.approx(0.19953, abs=1e-5)

    def test_rejects_non_finite(self):
        with pytest.raises(ConfigError):
            dbm_to_watts(float("nan"))


class TestNetworkConfig:
    def test_split_invariant(self):
        with pytest.raises(ConfigError):
            NetworkConfig(K=2, Q=10, Q1=10, Chat_k=np.array([1e8, 1e8]))

    def test_q2(self, small_cfg):
        assert small_cfg.Q1 + small_cfg.Q2 == small_cfg.Q

    def test_positive_parameters(self):
        with pytest.raises(ConfigError):
            NetworkConfig(K=2, sigma2=0.0, Chat_k=np.array([1e8, 1e8]))


class TestSampleChannels:
    def test_rayleigh_unit_second_moment(self, small_cfg):
        rng = np.random.default_rng(7)
        n, total = 0, 0.0
        for _ in range(10):
            ch = sample_channels(small_cfg, "rayleigh", rng=rng)
            for mat in (ch.hG, ch.hD):
                total += np.sum(np.abs(mat) ** 2)
                n += mat.size
        # per-entry |h|^2 is Exp(1): mean 1, variance 1
        se = 1.0 / np.sqrt(n)
        assert abs(total / n - 1.0) < 3 * se

    def test_rician_limit_is_line_of_sight(self, small_cfg):
        ch = sample_channels(small_cfg, "rician", rician_k=1e12,
                             rng=np.random.default_rng(3))
        assert np.allclose(ch.hG, 1.0, atol=1e-5)
        assert np.allclose(ch.hD, 1.0, atol=1e-5)

    def test_rician_unit_moment(self, small_cfg):
        rng = np.random.default_rng(11)
        vals = []
        for _ in range(200):
            ch = sample_channels(small_cfg, "rician", rician_k=4.0, rng=rng)
            vals.append(np.mean(np.abs(ch.hG) ** 2))
        # var(|h|^2) = sigma_sc^4 + 2 k sigma_sc^4 with sigma_sc^2 = 1/(k+1)
        n = 200 * small_cfg.K * small_cfg.N_r
        se = np.sqrt((0.2 ** 2 + 2 * 0.8 * 0.2) / n)
        assert abs(np.mean(vals) - 1.0) < 4 * se

    def test_same_seed_identical(self, small_cfg):
        a = sample_channels(small_cfg, "rayleigh", rng=np.random.default_rng(5))
        b = sample_channels(small_cfg, "rayleigh", rng=np.random.default_rng(5))
        assert np.array_equal(a.hG, b.hG)
        assert np.array_equal(a.hD, b.hD)

    def test_unknown_fading(self, small_cfg):
        with pytest.raises(ConfigError):
            sample_channels(small_cfg, "nakagami", rng=np.random.default_rng(0))


class TestCsiError:
    def test_zero_ratio_identity(self, rng):
        h = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        est, true = apply_csi_error(h, 0.0, rng)
        assert np.array_equal(est, true)

    def test_ratio_one_monte_carlo(self):
        rng = np.random.default_rng(2)
        h = (rng.standard_normal(8) + 1j * rng.standard_normal(8)) / np.sqrt(2)
        ratios = []
        for _ in range(10_000):
            est, true = apply_csi_error(h, 1.0, rng)
            ratios.append(np.linalg.norm(true - est) ** 2 / np.linalg.norm(est) ** 2)
        assert abs(np.mean(ratios) - 1.0) < 0.05

    def test_negative_ratio_rejected(self, rng):
        with pytest.raises(ConfigError):
            apply_csi_error(np.ones(4, dtype=complex), -0.1, rng)


class TestSampleNoise:
    def test_gaussian_component_variance(self):
        rng = np.random.default_rng(9)
        z = sample_noise(NoiseModel(kind="gaussian", sigma2=2.0), 1_000_000, rng)
        # each component has variance sigma2/2 = 1
        assert abs(np.var(z.real) - 1.0) < 0.01
        assert abs(np.var(z.imag) - 1.0) < 0.01

    def test_alpha_two_matches_gaussian(self):
        rng = np.random.default_rng(13)
        z = sample_noise(NoiseModel(kind="alpha_stable", alpha=2.0, scale=1.0),
                         200_000, rng)
        # alpha = 2 with scale c is N(0, 2 c^2) per component
        x = np.sort(z.real) / np.sqrt(2.0)
        q = stats.norm.ppf((np.arange(len(x)) + 0.5) / len(x))
        body = slice(len(x) // 100, -len(x) // 100)
        assert np.max(np.abs(x[body] - q[body])) < 0.05

    def test_alpha_14_heavy_tails(self):
        rng = np.random.default_rng(17)
        z = sample_noise(NoiseModel(kind="alpha_stable", alpha=1.4, scale=1.0),
                         200_000, rng)
        x = z.real
        assert abs(np.median(x)) < 0.02
        # tail mass far beyond anything a Gaussian of matched IQR would show
        iqr_sigma = stats.iqr(x) / 1.349
        assert np.mean(np.abs(x) > 5 * iqr_sigma) > 1e-3
        assert stats.kurtosis(np.clip(x, -50, 50)) > 3.0

    def test_none_kind_is_zero(self, rng):
        z = sample_noise(NoiseModel(kind="none"), 16, rng)
        assert np.all(z == 0)

    def test_determinism(self):
        m = NoiseModel(kind="alpha_stable", alpha=1.4, scale=0.5)
        a = sample_noise(m, 64, np.random.default_rng(21))
        b = sample_noise(m, 64, np.random.default_rng(21))
        assert np.array_equal(a, b)

    def test_invalid_parameters(self):
        with pytest.raises(ConfigError):
            NoiseModel(kind="alpha_stable", alpha=2.5)
        with pytest.raises(ConfigError):
            NoiseModel(kind="gaussian", sigma2=0.0)
        with pytest.raises(ConfigError):
            sample_noise(NoiseModel(), 0, np.random.default_rng(0))
