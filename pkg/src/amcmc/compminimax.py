"""Grid minimization of the approximate-chain error bounds over the
approximation error epsilon, under a computational budget.

An approximation at error ``eps`` produces sample paths a factor ``s(eps)``
faster than the exact kernel, so a budget of ``tau_max`` exact-kernel steps
buys ``floor(s(eps) * tau_max)`` approximate steps.  The "compminimax"
error is the grid argmin of the chosen bound (TV or L2) at that path
length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .bounds import (
    BoundInputs,
    ErgodicityParams,
    l2_bound_approx,
    l2_bound_exact,
    tv_bound_approx,
    tv_bound_exact,
)

__all__ = [
    "SpeedupFn",
    "CompminimaxProblem",
    "speedup_eval",
    "epsilon_compminimax",
    "curve_epsilon_vs_budget",
    "CURVE_CSV_HEADER",
]

SPEEDUP_FORMS = ("logarithmic", "linear", "quadratic", "exponential")

#: Value of every speedup form at eps = alpha / 2.
_S_MAX = 100.0


@dataclass(frozen=True)
class SpeedupFn:
    """A parametric speedup curve s(eps) on [0, alpha/2].

    The four standard forms satisfy s(0) = 1 and s(alpha/2) = 100 exactly
    and are monotone nondecreasing.  The extra ``constant`` form (s == 1,
    no speedup) is a degenerate case kept for testing the optimizer.
    """

    form: str
    alpha: float

    def __post_init__(self) -> None:
        if self.form not in SPEEDUP_FORMS + ("constant",):
            raise ValueError(f"unknown speedup form {self.form!r}")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")

    def __call__(self, eps: float) -> float:
        return speedup_eval(self, eps)


def speedup_eval(fn: SpeedupFn, eps: float) -> float:
    """Evaluate s(eps).  With u = 2 eps / alpha in [0, 1]:
    linear 1 + 99u, quadratic 1 + 99u^2, logarithmic 1 + 99 log2(1 + u),
    exponential 100^u."""
    if not (0.0 <= eps <= fn.alpha / 2.0):
        raise ValueError(
            f"eps={eps} outside the speedup domain [0, {fn.alpha / 2.0}]"
        )
    u = 2.0 * eps / fn.alpha
    if fn.form == "linear":
        return 1.0 + (_S_MAX - 1.0) * u
    if fn.form == "quadratic":
        return 1.0 + (_S_MAX - 1.0) * u * u
    if fn.form == "logarithmic":
        return 1.0 + (_S_MAX - 1.0) * math.log2(1.0 + u)
    if fn.form == "exponential":
        return _S_MAX**u
    return 1.0  # constant


def _default_grid(alpha: float, n: int) -> np.ndarray:
    # keep the top end strictly below alpha/2 so alpha_eps stays positive
    return np.linspace(0.0, 0.5 * alpha * (1.0 - 1e-9), n)


@dataclass(frozen=True)
class CompminimaxProblem:
    """Inputs of one budget-constrained bound minimization."""

    discrepancy: str  # "tv" or "l2"
    alpha: float
    tau_max: float
    tv0: float = 1.0
    tv0_eps: float = 1.0
    fstar: float = 1.0
    grid_size: int = 2000

    def __post_init__(self) -> None:
        if self.discrepancy not in ("tv", "l2"):
            raise ValueError(f"discrepancy must be 'tv' or 'l2', got {self.discrepancy!r}")
        if self.tau_max < 1:
            raise ValueError(f"tau_max must be >= 1, got {self.tau_max}")
        if self.grid_size < 2:
            raise ValueError("grid_size must be >= 2")

    def bound_at(self, eps: float, t: int) -> float:
        if self.discrepancy == "tv":
            if eps == 0.0:
                return tv_bound_exact(self.alpha, BoundInputs(t=t, tv0=self.tv0))
            return tv_bound_approx(
                ErgodicityParams(self.alpha, eps), t, self.tv0_eps
            )
        if eps == 0.0:
            return l2_bound_exact(
                self.alpha, BoundInputs(t=t, tv0=self.tv0, fstar=self.fstar)
            )
        return l2_bound_approx(
            ErgodicityParams(self.alpha, eps), t, self.tv0_eps, self.fstar
        )


def _path_length(fn: SpeedupFn, eps: float, tau_max: float) -> int:
    return max(1, math.floor(speedup_eval(fn, eps) * tau_max))


def epsilon_compminimax(
    problem: CompminimaxProblem, fn: SpeedupFn
) -> tuple[float, int, float]:
    """Grid-argmin of the bound over eps.

    Returns (eps_c, t_opt, bound_at_opt).  Ties break toward the smallest
    eps, so the search is fully deterministic.
    """
    best_eps, best_t, best_bound = 0.0, 0, math.inf
    for eps in _default_grid(problem.alpha, problem.grid_size):
        eps = float(eps)
        t = _path_length(fn, eps, problem.tau_max)
        b = problem.bound_at(eps, t)
        if b < best_bound:
            best_eps, best_t, best_bound = eps, t, b
    return best_eps, best_t, best_bound


CURVE_CSV_HEADER = ("tau_max", "form", "alpha", "eps_c", "t_opt", "bound_at_opt")


def curve_epsilon_vs_budget(
    problem_template: CompminimaxProblem,
    fn: SpeedupFn,
    tau_grid: Iterable[float],
) -> list[tuple[float, str, float, float, int, float]]:
    """One epsilon_compminimax row per budget; rows follow
    :data:`CURVE_CSV_HEADER`."""
    taus = list(tau_grid)
    if any(b < a for a, b in zip(taus, taus[1:])):
        raise ValueError("tau_grid must be sorted ascending")
    rows = []
    for tau in taus:
        problem = CompminimaxProblem(
            discrepancy=problem_template.discrepancy,
            alpha=problem_template.alpha,
            tau_max=tau,
            tv0=problem_template.tv0,
            tv0_eps=problem_template.tv0_eps,
            fstar=problem_template.fstar,
            grid_size=problem_template.grid_size,
        )
        eps_c, t_opt, bound = epsilon_compminimax(problem, fn)
        rows.append((tau, fn.form, problem.alpha, eps_c, t_opt, bound))
    return rows
