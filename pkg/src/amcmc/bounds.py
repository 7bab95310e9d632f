"""Closed-form TV and L2 error bounds for ergodic averages of uniformly
ergodic chains and their approximations.

The setting: an exact kernel satisfying a Doeblin condition with constant
``alpha`` (pairwise row TV at most ``1 - alpha``), and an approximating
kernel within uniform TV distance ``epsilon < alpha / 2`` of it.  The
approximate chain is then itself Doeblin with constant
``alpha_eps = alpha - 2 * epsilon``.

All functions are pure and stateless.  Bounds are returned raw (they can
exceed 1); use :func:`clamp_tv` when reporting TV quantities.

Note: the TV bound for the exact chain is implemented with the full factor
``(1 - (1 - alpha)**t)`` multiplying the initial TV distance — the form that
the two-state sharpness construction attains with equality — rather than the
typeset variant that attaches the initial distance to the power term only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ErgodicityParams",
    "BoundInputs",
    "variance_factor",
    "tv_bound_exact",
    "tv_bound_approx",
    "l2_bound_exact",
    "l2_bound_approx",
    "stationary_bias_bound",
    "mixing_time_bound",
    "clamp_tv",
]


def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def _check_t(t: int) -> None:
    if t < 1:
        raise ValueError(f"path length t must be >= 1, got {t}")


@dataclass(frozen=True)
class ErgodicityParams:
    """Doeblin constant of the exact kernel and the approximation error."""

    alpha: float
    epsilon: float = 0.0

    def __post_init__(self) -> None:
        _check_alpha(self.alpha)
        if not (0.0 <= self.epsilon < self.alpha / 2.0):
            raise ValueError(
                f"epsilon must lie in [0, alpha/2), got epsilon={self.epsilon} "
                f"with alpha={self.alpha}"
            )

    @property
    def alpha_eps(self) -> float:
        """Doeblin constant inherited by the approximate chain."""
        return self.alpha - 2.0 * self.epsilon


@dataclass(frozen=True)
class BoundInputs:
    """Path length, initial TV distance to stationarity, and ||f||_*."""

    t: int
    tv0: float = 1.0
    fstar: float = 1.0

    def __post_init__(self) -> None:
        _check_t(self.t)
        if not (0.0 <= self.tv0 <= 1.0):
            raise ValueError(f"tv0 must lie in [0, 1], got {self.tv0}")
        if self.fstar < 0.0:
            raise ValueError(f"fstar must be >= 0, got {self.fstar}")


def _pow_1m(alpha: float, t: float) -> float:
    """(1 - alpha)**t computed stably as exp(t * log1p(-alpha))."""
    return math.exp(t * math.log1p(-alpha))


def _cesaro_tv_term(alpha: float, t: int, tv0: float) -> float:
    """(1 - (1 - alpha)**t) * tv0 / (alpha * t).

    Shared by the exact and approximate TV bounds so that epsilon = 0
    reduces bit-for-bit.
    """
    return (1.0 - _pow_1m(alpha, t)) * tv0 / (alpha * t)


def variance_factor(t: int, alpha: float) -> float:
    """The variance factor S(t, alpha) of the L2 bounds.

    Closed form of the normalized double sum
    (1/t^2) * sum_{j,k=0}^{t-1} (1 - alpha)**|j - k|.

    When alpha * t is small the closed form subtracts terms of size
    2 / alpha^2 that cancel to O(1), so the sum over off-diagonal bands
    is accumulated directly instead.
    """
    _check_t(t)
    _check_alpha(alpha)
    if alpha * t < 0.5:
        d = np.arange(1, t, dtype=np.float64)
        bands = (t - d) * np.exp(d * math.log1p(-alpha))
        return (t + 2.0 * float(bands.sum())) / (t * t)
    a2t2 = alpha * alpha * t * t
    return (
        2.0 / (alpha * t)
        + 2.0 / (alpha * t * t)
        + 2.0 * _pow_1m(alpha, t + 1) / a2t2
        - 1.0 / t
        - 2.0 / a2t2
    )


def tv_bound_exact(alpha: float, inputs: BoundInputs) -> float:
    """TV bound between the stationary law and the exact chain's Cesaro
    average started from a law at TV distance ``tv0``."""
    _check_alpha(alpha)
    return _cesaro_tv_term(alpha, inputs.t, inputs.tv0)


def tv_bound_approx(params: ErgodicityParams, t: int, tv0_eps: float) -> float:
    """TV bound for the approximate chain's Cesaro average.

    ``tv0_eps`` is the TV distance between the approximate chain's
    stationary law and the initial law.
    """
    _check_t(t)
    return params.epsilon / params.alpha + _cesaro_tv_term(
        params.alpha_eps, t, tv0_eps
    )


def l2_bound_exact(alpha: float, inputs: BoundInputs) -> float:
    """L2 bound on the exact chain's ergodic-average error for a function
    with oscillation seminorm ``fstar``."""
    _check_alpha(alpha)
    f2 = inputs.fstar * inputs.fstar
    return 4.0 * f2 * _cesaro_tv_term(alpha, inputs.t, inputs.tv0) + f2 * (
        variance_factor(inputs.t, alpha)
    )


def l2_bound_approx(
    params: ErgodicityParams, t: int, tv0_eps: float, fstar: float
) -> float:
    """L2 bound on the approximate chain's ergodic-average error.

    Four terms: the approximate-chain analogues of the exact bound plus the
    epsilon cross term and the asymptotic squared bias 4 eps^2 fstar^2 /
    alpha^2.
    """
    _check_t(t)
    alpha, eps, a_eps = params.alpha, params.epsilon, params.alpha_eps
    f2 = fstar * fstar
    growth = 1.0 - _pow_1m(a_eps, t)
    return (
        4.0 * f2 * _cesaro_tv_term(a_eps, t, tv0_eps)
        + f2 * variance_factor(t, a_eps)
        + 8.0 * f2 * eps * growth / (t * alpha * a_eps)
        + 4.0 * eps * eps * f2 / (alpha * alpha)
    )


def stationary_bias_bound(params: ErgodicityParams) -> float:
    """Bound on TV between the exact and approximate stationary laws."""
    return params.epsilon / params.alpha


def mixing_time_bound(alpha: float, delta: float) -> float:
    """Worst-case number of steps until the exact chain is within TV
    ``delta`` of stationarity: log(delta) / log(1 - alpha)."""
    _check_alpha(alpha)
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return math.log(delta) / math.log1p(-alpha)


def clamp_tv(value: float) -> float:
    """Clamp a raw bound into [0, 1] for reporting TV quantities."""
    return min(max(value, 0.0), 1.0)
