"""Hot numeric kernels, JIT-compiled with numba when available.

Every kernel has two implementations: a numba ``@njit`` version and a pure
numpy/python fallback.  The active path is chosen at import time; set the
environment variable ``AMCMC_DISABLE_NUMBA=1`` to force the fallback (or it
is selected automatically when numba is not importable).

All randomness is drawn *outside* these kernels and passed in as arrays, so
the choice of path never changes which variates a seeded run consumes.
``benchmarks/bench_kernels.py`` times the two paths against each other.
"""

from __future__ import annotations

import os

import numpy as np

_TWO_PI_SQ = 2.0 * np.pi**2


def _numba_disabled() -> bool:
    return os.environ.get("AMCMC_DISABLE_NUMBA", "").strip().lower() in {
        "1",
        "true",
        "yes",
    }


# ---------------------------------------------------------------------------
# pure-numpy implementations (always importable, used as the fallback path)
# ---------------------------------------------------------------------------


def pg_series_numpy(exp_draws: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Truncated Polya-Gamma series sum.

    exp_draws has shape (m, T) of Exp(1) variates; c has shape (m,).
    Returns (1 / 2pi^2) * sum_k g_k / ((k - 1/2)^2 + c^2 / 4pi^2) per row.
    """
    T = exp_draws.shape[1]
    k = np.arange(1, T + 1, dtype=np.float64)
    denom = (k - 0.5) ** 2 + (c[:, None] * c[:, None]) / (4.0 * np.pi**2)
    return (exp_draws / denom).sum(axis=1) / _TWO_PI_SQ


def gauss_kernel_sum_numpy(xs: np.ndarray, ys: np.ndarray, phi: float) -> float:
    """sum_ij exp(-phi * ||x_i - y_j||^2) over all pairs."""
    x2 = np.einsum("ij,ij->i", xs, xs)
    y2 = np.einsum("ij,ij->i", ys, ys)
    d2 = x2[:, None] + y2[None, :] - 2.0 * (xs @ ys.T)
    np.maximum(d2, 0.0, out=d2)
    return float(np.exp(-phi * d2).sum())


def finite_chain_path_numpy(
    row_cdf: np.ndarray, start: int, uniforms: np.ndarray
) -> np.ndarray:
    """Simulate a finite-state chain from pre-drawn uniforms.

    row_cdf is the (K, K) matrix of row-wise cumulative transition
    probabilities; the path has len(uniforms) + 1 states starting at
    ``start``.
    """
    t = uniforms.shape[0]
    path = np.empty(t + 1, dtype=np.int64)
    path[0] = start
    state = start
    for i in range(t):
        state = int(np.searchsorted(row_cdf[state], uniforms[i], side="right"))
        path[i + 1] = state
    return path


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

HAS_NUMBA = False
if not _numba_disabled():
    try:
        from numba import njit, prange

        HAS_NUMBA = True
    except ImportError:  # pragma: no cover - depends on environment
        HAS_NUMBA = False

if HAS_NUMBA:

    @njit(cache=True)
    def pg_series_numba(exp_draws, c):  # pragma: no cover - compiled
        m, T = exp_draws.shape
        out = np.empty(m, dtype=np.float64)
        for i in range(m):
            ci2 = c[i] * c[i] / (4.0 * np.pi**2)
            acc = 0.0
            for k in range(T):
                acc += exp_draws[i, k] / ((k + 0.5) ** 2 + ci2)
            out[i] = acc / (2.0 * np.pi**2)
        return out

    @njit(cache=True, parallel=False)
    def gauss_kernel_sum_numba(xs, ys, phi):  # pragma: no cover - compiled
        m, q = xs.shape
        n = ys.shape[0]
        total = 0.0
        for i in range(m):
            for j in range(n):
                d2 = 0.0
                for l in range(q):
                    diff = xs[i, l] - ys[j, l]
                    d2 += diff * diff
                total += np.exp(-phi * d2)
        return total

    @njit(cache=True)
    def finite_chain_path_numba(row_cdf, start, uniforms):  # pragma: no cover
        t = uniforms.shape[0]
        K = row_cdf.shape[1]
        path = np.empty(t + 1, dtype=np.int64)
        path[0] = start
        state = start
        for i in range(t):
            u = uniforms[i]
            nxt = K - 1
            for j in range(K):
                if u < row_cdf[state, j]:
                    nxt = j
                    break
            state = nxt
            path[i + 1] = state
        return path

    pg_series = pg_series_numba
    gauss_kernel_sum = gauss_kernel_sum_numba
    finite_chain_path = finite_chain_path_numba
else:
    pg_series = pg_series_numpy
    gauss_kernel_sum = gauss_kernel_sum_numpy
    finite_chain_path = finite_chain_path_numpy
