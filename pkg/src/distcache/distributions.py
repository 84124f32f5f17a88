"""Class probability vectors used by the processes and the formulas."""
from __future__ import annotations

import math

import numpy as np

__all__ = ["ClassDistribution", "uniform", "geometric", "ExponentDistribution"]

_SUM_TOL = 1e-12


class ClassDistribution:
    """Probabilities ``p_0..p_{k-1}`` of drawing each class.

    Zero entries are allowed; they pad ``k`` up to a multiple of the block
    size without changing the process.
    """

    def __init__(self, probs, name: str = "explicit"):
        p = np.asarray(probs, dtype=np.float64).ravel()
        if p.size < 1:
            raise ValueError("need at least one class")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and non-negative")
        s = p.sum()
        if abs(s - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {s!r}, expected 1")
        # renormalize tiny float drift so the 1e-12 invariant always holds
        self.probs = p / s
        self.name = name

    @property
    def k(self) -> int:
        return int(self.probs.size)

    @property
    def active(self) -> np.ndarray:
        return self.probs[self.probs > 0]

    @property
    def k_active(self) -> int:
        return int(np.count_nonzero(self.probs > 0))

    def __len__(self) -> int:
        return self.k

    def __repr__(self) -> str:
        return f"ClassDistribution(name={self.name!r}, k={self.k})"

    def padded_to(self, block_size: int) -> "ClassDistribution":
        """Append zero-probability classes until ``block_size`` divides k."""
        pad = (-self.k) % block_size
        if pad == 0:
            return self
        return ClassDistribution(np.concatenate([self.probs, np.zeros(pad)]), self.name)

    def block_probs(self, block_size: int) -> np.ndarray:
        """``P_i``: total probability of the classes sharing count block i."""
        if self.k % block_size:
            raise ValueError(f"block size {block_size} does not divide k={self.k}")
        return self.probs.reshape(-1, block_size).sum(axis=1)

    def cdf(self) -> np.ndarray:
        """Cumulative sums, pinned to 1.0 from the last nonzero class on.

        With ``searchsorted(cdf, u, side='right')`` and ``u`` in [0, 1) this
        never returns a zero-probability class.
        """
        c = np.cumsum(self.probs)
        last = int(np.flatnonzero(self.probs)[-1])
        c[last:] = 1.0
        return c

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.searchsorted(self.cdf(), rng.random(n), side="right").astype(np.int64)


def uniform(k: int) -> ClassDistribution:
    if k < 1:
        raise ValueError("k must be >= 1")
    return ClassDistribution(np.full(k, 1.0 / k), name="uniform")


def geometric(k: int) -> ClassDistribution:
    """``p_i`` proportional to ``2^-(i+1)``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    w = np.ldexp(1.0, -np.arange(1, k + 1))
    return ClassDistribution(w / w.sum(), name="geometric")


class ExponentDistribution:
    """Bucket probabilities of the first float radix pass.

    Uniform keys in [theta, 1) are split into ``g`` exponent groups (unbiased
    exponents -1..-g), each cut into ``K`` equal-width mantissa buckets. The
    probability of a bucket is the length of its value interval intersected
    with [theta, 1), normalized. With ``theta = 2^-g`` every bucket of group
    ``i`` has probability ``2^-i / K`` up to normalization.

    ``to_class_distribution`` orders buckets by key value (ascending), which
    is the order of the first-pass class indices.
    """

    def __init__(self, g: int, K: int, theta: float | None = None):
        if g < 1 or K < 1:
            raise ValueError("g and K must be >= 1")
        self.g = int(g)
        self.K = int(K)
        self.theta = math.ldexp(1.0, -self.g) if theta is None else float(theta)
        if not 0.0 <= self.theta < 1.0:
            raise ValueError("theta must lie in [0, 1)")

    def raw_bucket_probs(self) -> np.ndarray:
        """Unnormalized probabilities, ascending key order, length g*K."""
        out = np.empty(self.g * self.K)
        pos = 0
        for i in range(self.g, 0, -1):
            lo = math.ldexp(1.0, -i)
            width = lo / self.K
            for b in range(self.K):
                a = lo + b * width
                z = a + width
                out[pos] = max(0.0, z - max(a, self.theta))
                pos += 1
        return out

    def group_probs(self) -> np.ndarray:
        """Unnormalized mass per group, ordered i = 1..g (exponent -1 first)."""
        raw = self.raw_bucket_probs().reshape(self.g, self.K).sum(axis=1)
        return raw[::-1]

    def tail_mass(self) -> float:
        """Mass of [0, theta), which the first pass never sees."""
        return self.theta

    def to_class_distribution(self) -> ClassDistribution:
        raw = self.raw_bucket_probs()
        return ClassDistribution(raw / raw.sum(), name="float-model")
