"""Calibrated noise primitives.

Laplace and Gaussian samplers plus report-noisy-min selection, all driven
by an explicitly seeded counter-based random stream (Philox), so identical
seeds give identical sample sequences on every platform.  Noise scales are
always computed by callers from the algorithms' closed forms; this module
never interprets (epsilon, delta) itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidParameterError

_MASK64 = (1 << 64) - 1


def mix64(*parts: int) -> int:
    """Deterministic 64-bit mixing of integer parts (splitmix64 chain).

    Used to derive child seeds and per-cell experiment seeds.
    """
    h = 0x9E3779B97F4A7C15
    for p in parts:
        h = (h ^ (p & _MASK64)) * 0xBF58476D1CE4E5B9 & _MASK64
        h ^= h >> 27
        h = h * 0x94D049BB133111EB & _MASK64
        h ^= h >> 31
    return h


@dataclass(frozen=True)
class PrivacyBudget:
    epsilon: float
    delta: float

    def __post_init__(self):
        if self.epsilon <= 0:
            raise InvalidParameterError(f"epsilon must be positive, got {self.epsilon}")
        if not (0 < self.delta < 1):
            raise InvalidParameterError(f"delta must be in (0,1), got {self.delta}")

    @property
    def noiseless(self) -> bool:
        return np.isinf(self.epsilon)


class RandomStream:
    """Single-owner random stream over a counter-based generator.

    Parallel code must not share a stream; derive independent child
    streams with ``child(stream_id)`` instead.
    """

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        self._gen = np.random.Generator(np.random.Philox(key=self.seed))

    def child(self, stream_id: int) -> "RandomStream":
        return RandomStream(mix64(self.seed, stream_id))

    def uniform(self, size=None):
        return self._gen.uniform(size=size)

    def standard_normal(self, size=None):
        return self._gen.standard_normal(size=size)


def laplace_sample(scale: float, rng: RandomStream, size=None):
    """Laplace(scale) via inverse CDF: -scale*sign(u)*ln(1-2|u|),
    u uniform on (-1/2, 1/2).  scale=0 returns exactly 0."""
    if scale < 0:
        raise InvalidParameterError(f"scale must be nonnegative, got {scale}")
    if scale == 0:
        return 0.0 if size is None else np.zeros(size)
    u = rng.uniform(size=size) - 0.5
    return -scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def gaussian_sample_vec(dim: int, sigma: float, rng: RandomStream) -> np.ndarray:
    """i.i.d. N(0, sigma^2) vector; sigma=0 gives the zero vector."""
    if dim < 1:
        raise InvalidParameterError(f"dim must be >= 1, got {dim}")
    if sigma < 0:
        raise InvalidParameterError(f"sigma must be nonnegative, got {sigma}")
    if sigma == 0:
        return np.zeros(dim)
    return sigma * rng.standard_normal(size=dim)


def report_noisy_min(scores, scale: float, rng: RandomStream):
    """Add fresh Laplace(scale) noise to each score, return the argmin
    index (ties break to the lowest index) and the noisy score there."""
    s = np.asarray(scores, dtype=float)
    if s.ndim != 1 or s.size == 0:
        raise InvalidInputError("scores must be a nonempty 1-d array")
    if not np.all(np.isfinite(s)):
        raise InvalidInputError("scores contain non-finite values")
    noisy = s + laplace_sample(scale, rng, size=s.size)
    j = int(np.argmin(noisy))
    return j, float(noisy[j])
