"""Tests for the multiplicative-noise gradient oracles."""

import math

import numpy as np
import pytest

from shangopt.noise import (
    MnsOracleConfig,
    NoiseShape,
    NoiseStream,
    NoisyGradientOracle,
    empirical_mns_constant,
    sample_noisy_gradient,
)


class TestConfig:
    def test_effective_constant(self):
        cfg = MnsOracleConfig(sigma=2.0, averaging_count=4)
        assert cfg.effective_constant == 1.0

    @pytest.mark.parametrize("sigma", [-0.5, math.nan, math.inf])
    def test_rejects_bad_sigma(self, sigma):
        with pytest.raises(ValueError):
            MnsOracleConfig(sigma=sigma)

    @pytest.mark.parametrize("k", [0, -1, 1.5])
    def test_rejects_bad_averaging(self, k):
        with pytest.raises(ValueError):
            MnsOracleConfig(sigma=1.0, averaging_count=k)

    def test_shape_coercion_from_string(self):
        cfg = MnsOracleConfig(sigma=1.0, shape="scalar")
        assert cfg.shape is NoiseShape.SCALAR_FACTOR


class TestNoiseStream:
    def test_same_key_same_draws(self):
        a = NoiseStream(123, 7).normals(64)
        b = NoiseStream(123, 7).normals(64)
        np.testing.assert_array_equal(a, b)

    def test_split_draws_match_block(self):
        """Drawing 64 at once equals drawing 16 four times (counter-based)."""
        whole = NoiseStream(9, 1).normals(64)
        s = NoiseStream(9, 1)
        parts = np.concatenate([s.normals(16) for _ in range(4)])
        np.testing.assert_array_equal(whole, parts)

    @pytest.mark.parametrize("other", [(123, 8), (124, 7)])
    def test_distinct_keys_distinct_draws(self, other):
        a = NoiseStream(123, 7).normals(64)
        b = NoiseStream(*other).normals(64)
        assert not np.array_equal(a, b)

    def test_rejects_negative_keys(self):
        with pytest.raises(ValueError):
            NoiseStream(-1)
        with pytest.raises(ValueError):
            NoiseStream(0, -2)


class TestSampleNoisyGradient:
    def test_sigma_zero_exact(self):
        cfg = MnsOracleConfig(sigma=0.0)
        grad = np.array([1.5, -2.5])
        out = sample_noisy_gradient(cfg, NoiseStream(0), grad)
        np.testing.assert_array_equal(out, grad)

    def test_sigma_zero_still_consumes_draws(self):
        """Stream positions stay aligned across noise levels."""
        s = NoiseStream(5)
        sample_noisy_gradient(MnsOracleConfig(sigma=0.0, averaging_count=3), s, np.ones(2))
        after_zero = s.normals(4)
        s2 = NoiseStream(5)
        sample_noisy_gradient(MnsOracleConfig(sigma=1.0, averaging_count=3), s2, np.ones(2))
        after_one = s2.normals(4)
        np.testing.assert_array_equal(after_zero, after_one)

    def test_zero_gradient_gives_zero(self):
        cfg = MnsOracleConfig(sigma=10.0)
        out = sample_noisy_gradient(cfg, NoiseStream(0), np.zeros(3))
        np.testing.assert_array_equal(out, np.zeros(3))

    def test_scalar_shape_rescales_whole_vector(self):
        cfg = MnsOracleConfig(sigma=1.0, shape=NoiseShape.SCALAR_FACTOR, seed=3)
        grad = np.array([2.0, -4.0])
        out = sample_noisy_gradient(cfg, NoiseStream(3), grad)
        # one common factor: out is collinear with grad
        assert out[1] / out[0] == pytest.approx(-2.0, rel=1e-12)

    def test_elementwise_shape_perturbs_coordinates_independently(self):
        cfg = MnsOracleConfig(sigma=1.0, shape=NoiseShape.ELEMENTWISE, seed=3)
        grad = np.array([2.0, -4.0])
        out = sample_noisy_gradient(cfg, NoiseStream(3), grad)
        assert out[1] / out[0] != pytest.approx(-2.0, rel=1e-6)

    def test_averaged_draw_matches_manual_mean(self):
        """K-averaging equals the mean of the K factors applied to grad."""
        grad = np.array([3.0])
        cfg = MnsOracleConfig(sigma=0.7, shape=NoiseShape.SCALAR_FACTOR, averaging_count=4)
        out = sample_noisy_gradient(cfg, NoiseStream(21), grad)
        z = NoiseStream(21).normals(4)
        expected = (1.0 + 0.7 * z.mean()) * grad
        np.testing.assert_array_equal(out, expected)

    def test_rejects_nonfinite_gradient(self):
        with pytest.raises(ValueError):
            sample_noisy_gradient(MnsOracleConfig(sigma=1.0), NoiseStream(0), [np.inf])

    def test_sample_moments_match_normal(self):
        # sigma=10 on grad [1]: g ~ N(1, 100); 1e5 samples
        n = 10**5
        z = NoiseStream(40).normals(n)
        g = 1.0 + 10.0 * z
        assert abs(g.mean() - 1.0) <= 3 * 10.0 / math.sqrt(n)
        assert g.var(ddof=1) == pytest.approx(100.0, rel=0.05)


class TestOracle:
    def test_draw_accounting(self):
        oracle = NoisyGradientOracle(MnsOracleConfig(sigma=1.0), run_index=2)
        for _ in range(5):
            oracle.sample(np.ones(3))
        assert oracle.samples_drawn == 5

    def test_equal_keys_bitwise_equal(self):
        cfg = MnsOracleConfig(sigma=1.0, seed=17)
        a = NoisyGradientOracle(cfg, run_index=4)
        b = NoisyGradientOracle(cfg, run_index=4)
        for _ in range(10):
            np.testing.assert_array_equal(a.sample(np.ones(2)), b.sample(np.ones(2)))


class TestEmpiricalConstant:
    def test_sigma_zero_exact(self):
        cfg = MnsOracleConfig(sigma=0.0)
        assert empirical_mns_constant(cfg, NoiseStream(0), np.ones(2), 10**4) == 0.0

    def test_elementwise_example(self):
        # sigma=1, K=1, grad=[3,4]: constant tends to 1.0
        cfg = MnsOracleConfig(sigma=1.0, shape=NoiseShape.ELEMENTWISE)
        c = empirical_mns_constant(cfg, NoiseStream(1), np.array([3.0, 4.0]), 10**5)
        assert c == pytest.approx(1.0, abs=0.05)

    def test_scalar_averaged_example(self):
        # sigma=1, K=4, grad=[1]: constant tends to 1/4
        cfg = MnsOracleConfig(sigma=1.0, shape=NoiseShape.SCALAR_FACTOR, averaging_count=4)
        c = empirical_mns_constant(cfg, NoiseStream(2), np.array([1.0]), 10**5)
        assert c == pytest.approx(0.25, abs=0.02)

    def test_rejects_zero_gradient(self):
        with pytest.raises(ValueError, match="zero gradient"):
            empirical_mns_constant(MnsOracleConfig(sigma=1.0), NoiseStream(0), np.zeros(2), 10**4)

    def test_rejects_small_sample_count(self):
        with pytest.raises(ValueError):
            empirical_mns_constant(MnsOracleConfig(sigma=1.0), NoiseStream(0), np.ones(1), 100)
