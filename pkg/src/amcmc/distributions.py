"""Seeded random-variate primitives shared by all samplers.

A :class:`SeededRng` wraps a counter-based numpy ``Philox`` bit generator
keyed on (seed, stream), so per-chain streams are independent by
construction and identical (seed, stream) pairs reproduce identical variate
sequences across runs and platforms.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels

__all__ = [
    "SeededRng",
    "sample_dirichlet",
    "sample_multinomial",
    "sample_mvn",
    "sample_gamma",
    "sample_discrete",
    "sample_polya_gamma",
    "polya_gamma_mean",
    "PG_TRUNCATION",
]

#: Number of retained terms of the Polya-Gamma series representation.
PG_TRUNCATION = 200


class SeededRng:
    """Counter-based generator with explicit (seed, stream) identity."""

    def __init__(self, seed: int, stream: int = 0):
        if seed < 0 or stream < 0:
            raise ValueError("seed and stream must be nonnegative")
        self.seed = int(seed)
        self.stream = int(stream)
        self._gen = np.random.Generator(
            np.random.Philox(key=(self.seed << 16) + self.stream)
        )

    def spawn(self, stream: int) -> "SeededRng":
        """Independent generator sharing this seed on another stream."""
        return SeededRng(self.seed, stream)

    # thin pass-throughs used throughout the samplers
    def uniform(self, size=None):
        return self._gen.uniform(size=size)

    def normal(self, size=None):
        return self._gen.standard_normal(size=size)

    def exponential(self, size=None):
        return self._gen.standard_exponential(size=size)

    def binomial(self, n: int, p: float) -> int:
        return int(self._gen.binomial(n, p))

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)


def sample_dirichlet(rng: SeededRng, concentration) -> np.ndarray:
    """Dirichlet draw via normalized Gamma variates."""
    conc = np.asarray(concentration, dtype=np.float64)
    if np.any(conc <= 0.0):
        raise ValueError("Dirichlet concentrations must be positive")
    g = rng._gen.gamma(conc)
    total = g.sum()
    if total == 0.0:
        # all-tiny concentrations can underflow; fall back to the argmax
        # convention (a draw concentrated on one coordinate)
        out = np.zeros_like(conc)
        out[int(rng._gen.integers(len(conc)))] = 1.0
        return out
    return g / total


def sample_multinomial(rng: SeededRng, n: int, probs) -> np.ndarray:
    """Multinomial counts by sequential binomial decomposition."""
    p = np.asarray(probs, dtype=np.float64)
    if n < 0:
        raise ValueError("n must be >= 0")
    if np.any(p < 0.0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("probs must be a probability vector")
    counts = np.zeros(len(p), dtype=np.int64)
    remaining = n
    rem_mass = 1.0
    for k in range(len(p) - 1):
        if remaining == 0:
            break
        q = p[k] / rem_mass if rem_mass > 0.0 else 1.0
        c = rng.binomial(remaining, min(max(q, 0.0), 1.0))
        counts[k] = c
        remaining -= c
        rem_mass -= p[k]
    counts[-1] += remaining
    return counts


def sample_mvn(rng: SeededRng, mean, covariance) -> np.ndarray:
    """Multivariate normal via a symmetric factor root; eigendecomposition
    handles the semidefinite case."""
    mean = np.asarray(mean, dtype=np.float64)
    cov = np.asarray(covariance, dtype=np.float64)
    if np.abs(cov - cov.T).max() > 1e-8:
        raise ValueError("covariance must be symmetric")
    cov = 0.5 * (cov + cov.T)
    try:
        root = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(cov)
        if vals.min() < -1e-8:
            raise ValueError(
                f"covariance has negative eigenvalue {vals.min():.3e}"
            )
        root = vecs * np.sqrt(np.clip(vals, 0.0, None))
    return mean + root @ rng.normal(size=len(mean))


def sample_gamma(rng: SeededRng, shape: float, rate: float) -> float:
    """Gamma variate in the shape/rate parameterization."""
    if shape <= 0.0 or rate <= 0.0:
        raise ValueError("shape and rate must be positive")
    return float(rng._gen.gamma(shape) / rate)


def sample_discrete(rng: SeededRng, probs) -> int:
    """Inverse-CDF draw of an index from a probability vector."""
    p = np.asarray(probs, dtype=np.float64)
    if np.any(p < 0.0) or p.sum() <= 0.0:
        raise ValueError("probs must be nonnegative with positive mass")
    cdf = np.cumsum(p / p.sum())
    return min(int(np.searchsorted(cdf, rng.uniform(), side="right")), len(p) - 1)


def polya_gamma_mean(c: float) -> float:
    """E[PG(1, c)] = tanh(c/2) / (2c), with the limit 1/4 at c = 0."""
    if c == 0.0:
        return 0.25
    return math.tanh(c / 2.0) / (2.0 * c)


def _pg_truncated_mean(c: np.ndarray) -> np.ndarray:
    """Mean of the T-term truncated series (each g_k has mean 1)."""
    k = np.arange(1, PG_TRUNCATION + 1, dtype=np.float64)
    denom = (k - 0.5) ** 2 + (np.atleast_1d(c)[:, None] ** 2) / (4.0 * np.pi**2)
    return (1.0 / denom).sum(axis=1) / (2.0 * np.pi**2)


def sample_polya_gamma(rng: SeededRng, c) -> np.ndarray | float:
    """PG(1, c) variates via the weighted sum of Exp(1) variates,

        omega = (1 / 2 pi^2) sum_{k >= 1} g_k / ((k - 1/2)^2 + c^2 / 4 pi^2),

    truncated at ``PG_TRUNCATION`` terms with the analytic tail mean added
    back, so the truncation introduces no mean bias.  Accepts a scalar or a
    vector of tilt parameters; vector input consumes one block of
    exponentials in a fixed order.
    """
    scalar = np.isscalar(c)
    cv = np.atleast_1d(np.asarray(c, dtype=np.float64))
    g = rng.exponential(size=(len(cv), PG_TRUNCATION))
    partial = _kernels.pg_series(g, np.abs(cv))
    tail = np.array([polya_gamma_mean(abs(x)) for x in cv]) - _pg_truncated_mean(
        np.abs(cv)
    )
    out = partial + tail
    return float(out[0]) if scalar else out
