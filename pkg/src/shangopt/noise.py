"""Multiplicative-noise gradient oracles.

The oracle returns g = (1 + sigma*Z) * grad f with Z standard normal — either
one scalar factor per call or one factor per coordinate — optionally averaged
over K independent draws.  Both shapes satisfy the multiplicative-noise bound
E||g - grad f||^2 = sigma^2 ||grad f||^2 exactly, and averaging K draws scales
the constant down to sigma^2 / K.

Streams are counter-based (Philox) and keyed by (seed, run_index), so every
trajectory owns an independent, reproducible stream regardless of thread
scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "NoiseShape",
    "MnsOracleConfig",
    "NoiseStream",
    "NoisyGradientOracle",
    "sample_noisy_gradient",
    "empirical_mns_constant",
]


class NoiseShape(str, Enum):
    SCALAR_FACTOR = "scalar"
    ELEMENTWISE = "elementwise"


@dataclass(frozen=True)
class MnsOracleConfig:
    """Oracle settings: noise level, shape, averaging count, and base seed."""

    sigma: float
    shape: NoiseShape = NoiseShape.ELEMENTWISE
    averaging_count: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0.0 or not np.isfinite(self.sigma):
            raise ValueError(f"sigma must be finite and >= 0, got {self.sigma}")
        if int(self.averaging_count) != self.averaging_count or self.averaging_count < 1:
            raise ValueError(f"averaging_count must be an integer >= 1, got {self.averaging_count}")
        object.__setattr__(self, "shape", NoiseShape(self.shape))
        object.__setattr__(self, "averaging_count", int(self.averaging_count))

    @property
    def effective_constant(self) -> float:
        """Noise constant of the averaged estimator: sigma^2 / K."""
        return self.sigma**2 / self.averaging_count


class NoiseStream:
    """Deterministic normal-draw stream for one (seed, run_index) pair.

    Philox is counter-based: distinct keys give independent streams and the
    draw sequence never depends on host, thread order, or other streams.
    """

    def __init__(self, seed: int, run_index: int = 0):
        if seed < 0 or run_index < 0:
            raise ValueError("seed and run_index must be nonnegative")
        self.seed = int(seed)
        self.run_index = int(run_index)
        key = np.array([self.seed, self.run_index], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def normals(self, shape) -> np.ndarray:
        return self._gen.standard_normal(shape)


def sample_noisy_gradient(
    config: MnsOracleConfig, stream: NoiseStream, true_gradient
) -> np.ndarray:
    """One noisy gradient sample: the K-average of (1 + sigma*Z) * grad.

    Scalar shape uses one Z per draw; elementwise uses one Z per coordinate.
    Conditionally unbiased; sigma = 0 returns the gradient bitwise (draws are
    still consumed, keeping stream positions aligned across noise levels).
    """
    grad = np.atleast_1d(np.asarray(true_gradient, dtype=np.float64))
    if not np.all(np.isfinite(grad)):
        raise ValueError("true_gradient must be finite")
    k = config.averaging_count
    if config.shape is NoiseShape.SCALAR_FACTOR:
        zbar = stream.normals(k).mean()
        return (1.0 + config.sigma * zbar) * grad
    zbar = stream.normals((k, grad.shape[0])).mean(axis=0)
    return (1.0 + config.sigma * zbar) * grad


class NoisyGradientOracle:
    """Stateful oracle: a config plus a private stream, with draw accounting."""

    def __init__(self, config: MnsOracleConfig, run_index: int = 0):
        self.config = config
        self.stream = NoiseStream(config.seed, run_index)
        self.samples_drawn = 0

    def sample(self, true_gradient) -> np.ndarray:
        self.samples_drawn += 1
        return sample_noisy_gradient(self.config, self.stream, true_gradient)


def empirical_mns_constant(
    config: MnsOracleConfig, stream: NoiseStream, true_gradient, n_samples: int
) -> float:
    """Monte-Carlo estimate of E||g - grad||^2 / ||grad||^2.

    Converges to sigma^2 / K for both noise shapes.  Exactly 0 when sigma = 0.
    """
    if n_samples < 10**4:
        raise ValueError(f"n_samples must be >= 1e4 for a stable estimate, got {n_samples}")
    grad = np.atleast_1d(np.asarray(true_gradient, dtype=np.float64))
    gnorm_sq = float(np.dot(grad, grad))
    if gnorm_sq == 0.0:
        raise ValueError("empirical MNS ratio is undefined at a zero gradient")
    k = config.averaging_count
    if config.shape is NoiseShape.SCALAR_FACTOR:
        zbar = stream.normals((n_samples, k)).mean(axis=1)
        dev_sq = (config.sigma * zbar) ** 2 * gnorm_sq
    else:
        zbar = stream.normals((n_samples, k, grad.shape[0])).mean(axis=1)
        dev_sq = ((config.sigma * zbar * grad) ** 2).sum(axis=1)
    return float(dev_sq.mean()) / gnorm_sq
