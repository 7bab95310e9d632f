"""Polya-Gamma Gibbs sampling for Bayesian logistic regression, exact and
with subset-covariance approximation.

Exact sweep: omega_i ~ PG(1, x_i beta) for every observation, then
beta ~ N(m_N, S_N) with S_N = (X' Omega X + B^{-1})^{-1} and
m_N = S_N (X' kappa + B^{-1} b), kappa = y - 1/2.

Subset sweep: a uniform subset V is redrawn each step, omega is drawn only
on V, and beta ~ N(S_V X' kappa, S_V) with
S_V = ((N/|V|) X_V' Omega_V X_V + B^{-1})^{-1}.  Only the curvature matrix
is subsampled; the mean keeps the full-data X' kappa.  With |V| = N (and
b = 0) the two sweeps coincide draw for draw under a shared seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .distributions import SeededRng, sample_polya_gamma

__all__ = [
    "LogisticData",
    "PGState",
    "SubsetPolicy",
    "gibbs_step_exact",
    "gibbs_step_subset",
    "gaussian_kl",
    "pinsker_tv",
    "run_chain",
    "adaptive_subset_size",
    "simulate_logistic",
]


@dataclass(frozen=True)
class LogisticData:
    """Standardized design matrix and binary responses."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y.astype(np.int64))
        if X.ndim != 2 or len(y) != X.shape[0]:
            raise ValueError("X must be N x p with matching y")
        if not np.isin(self.y, (0, 1)).all():
            raise ValueError("y entries must be 0 or 1")

    @property
    def kappa(self) -> np.ndarray:
        return self.y - 0.5

    @property
    def N(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @staticmethod
    def standardize(X_raw: np.ndarray, y: np.ndarray) -> "LogisticData":
        X = np.asarray(X_raw, dtype=np.float64)
        sd = X.std(axis=0)
        sd[sd == 0.0] = 1.0
        return LogisticData((X - X.mean(axis=0)) / sd, y)


@dataclass(frozen=True)
class PGState:
    beta: np.ndarray
    omega: np.ndarray  # weights for the indices in ``subset``
    subset: np.ndarray  # indices the weights belong to


@dataclass(frozen=True)
class SubsetPolicy:
    """Fixed-|V| or adaptive subset sizing."""

    mode: str = "fixed"  # "fixed" | "adaptive"
    size: int | None = None
    epsilon: float = 0.1
    C: float = 1.0
    M: float = 2.0

    def __post_init__(self) -> None:
        if self.mode not in ("fixed", "adaptive"):
            raise ValueError("mode must be 'fixed' or 'adaptive'")
        if self.mode == "fixed" and (self.size is None or self.size < 1):
            raise ValueError("fixed policy needs a positive size")


def _precision_factor(A: np.ndarray):
    try:
        return cho_factor(A, lower=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
        raise ValueError(f"precision matrix not PD: {exc}") from exc


def _draw_beta(
    rng: SeededRng,
    X_full: np.ndarray,
    kappa: np.ndarray,
    omega: np.ndarray,
    rows: np.ndarray,
    scale: float,
    B_inv: np.ndarray,
    prior_shift: np.ndarray | None,
) -> np.ndarray:
    """beta ~ N(S h, S), S = (scale * X_rows' Omega X_rows + B^{-1})^{-1},
    h = X' kappa (+ B^{-1} b when prior_shift is given).

    The draw is mean + L^{-T} z for A = L L', so matched seeds give
    bit-identical draws whenever A and h match.
    """
    Xr = X_full[rows]
    A = scale * (Xr.T * omega) @ Xr + B_inv
    h = X_full.T @ kappa
    if prior_shift is not None:
        h = h + prior_shift
    c, low = _precision_factor(A)
    mean = cho_solve((c, low), h)
    z = rng.normal(size=len(h))
    return mean + solve_triangular(c, z, lower=low, trans="T")


def gibbs_step_exact(
    rng: SeededRng,
    state: PGState,
    data: LogisticData,
    b: np.ndarray,
    B: np.ndarray,
) -> PGState:
    """Full-data PG sweep: all omega_i, then beta from its Gaussian
    conditional."""
    B_inv = np.linalg.inv(B)
    rows = np.arange(data.N)
    omega = np.asarray(sample_polya_gamma(rng, data.X @ state.beta))
    beta = _draw_beta(
        rng, data.X, data.kappa, omega, rows, 1.0, B_inv, B_inv @ b
    )
    return PGState(beta, omega, rows)


def gibbs_step_subset(
    rng: SeededRng,
    state: PGState,
    data: LogisticData,
    b: np.ndarray,
    B: np.ndarray,
    policy: SubsetPolicy,
) -> PGState:
    """Subset-covariance PG sweep.

    The subset is uniform without replacement and redrawn every step; when
    the requested size equals N the subset draw is skipped entirely so the
    step consumes exactly the randomness of the exact sweep.
    """
    B_inv = np.linalg.inv(B)
    size = policy.size if policy.mode == "fixed" else _adaptive_size(state, data, policy)
    if size is None or size > data.N:
        size = data.N
    if size < data.p + 1:
        raise ValueError(f"subset size {size} below p + 1 = {data.p + 1}")
    if size == data.N:
        rows = np.arange(data.N)
    else:
        rows = np.sort(rng.permutation(data.N)[:size])
    omega = np.asarray(sample_polya_gamma(rng, data.X[rows] @ state.beta))
    beta = _draw_beta(
        rng, data.X, data.kappa, omega, rows, data.N / size, B_inv, None
    )
    return PGState(beta, omega, rows)


def _adaptive_size(state: PGState, data: LogisticData, policy: SubsetPolicy) -> int:
    rows = state.subset
    scaled = (data.X[rows].T * state.omega) @ data.X[rows] / len(rows)
    vals = np.linalg.eigvalsh(0.5 * (scaled + scaled.T))
    lam_min, lam_max = float(vals[0]), float(vals[-1])
    return adaptive_subset_size(
        lam_min, lam_max, data.p, policy.epsilon, data.N, C=policy.C, M=policy.M
    )


def gaussian_kl(m1, S1, m2, S2) -> float:
    """KL(N(m1, S1) || N(m2, S2)) for PD covariances."""
    m1 = np.asarray(m1, dtype=np.float64)
    m2 = np.asarray(m2, dtype=np.float64)
    S1 = np.asarray(S1, dtype=np.float64)
    S2 = np.asarray(S2, dtype=np.float64)
    p = len(m1)
    c2, low2 = _precision_factor(S2)
    c1, low1 = _precision_factor(S1)
    tr = float(np.trace(cho_solve((c2, low2), S1)))
    diff = m2 - m1
    quad = float(diff @ cho_solve((c2, low2), diff))
    logdet1 = 2.0 * float(np.log(np.diag(c1)).sum())
    logdet2 = 2.0 * float(np.log(np.diag(c2)).sum())
    return 0.5 * (tr - p + quad + logdet2 - logdet1)


def pinsker_tv(kl: float) -> float:
    """TV upper bound sqrt(KL / 2), clamped to 1."""
    return min(math.sqrt(max(kl, 0.0) / 2.0), 1.0)


def adaptive_subset_size(
    lam_min: float,
    lam_max: float,
    p: int,
    epsilon: float,
    N: int,
    C: float = 1.0,
    M: float = 2.0,
) -> int:
    """Subset size targeting per-step kernel error ``epsilon``.

    delta is the three-way minimum rate built from the spectrum of the
    scaled curvature matrix (with ell_min = lam_min / 2 and ell_max =
    lam_max + lam_min / 2); the size bound is
    p C M^4 delta^{-2} log^2(2 M^2 delta^{-2}), clamped to [p + 1, N].
    The constants are heuristic knobs, not guarantees.
    """
    if lam_min <= 0.0 or lam_max <= 0.0:
        raise ValueError("eigenvalue estimates must be positive")
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    ell_min = lam_min / 2.0
    ell_max = lam_max + lam_min / 2.0
    sp = math.sqrt(p)
    delta = min(
        2.0 * math.sqrt(2.0) * epsilon / sp * ell_min**2 / ell_max**1.5,
        epsilon**2 * ell_min / (p * ell_max),
        epsilon / sp * lam_min / (lam_min + lam_max),
    )
    bound = p * C * M**4 / delta**2 * math.log(2.0 * M**2 / delta**2) ** 2
    return int(min(max(math.ceil(bound), p + 1), N))


@dataclass
class ChainResult:
    trace: np.ndarray  # (steps, p) post burn-in beta draws
    audit_steps: np.ndarray
    audit_tv: np.ndarray


def run_chain(
    rng: SeededRng,
    data: LogisticData,
    b: np.ndarray,
    B: np.ndarray,
    steps: int,
    burn_in: int = 0,
    policy: SubsetPolicy | None = None,
    audit_every: int = 0,
    audit_rng: SeededRng | None = None,
) -> ChainResult:
    """Run the exact chain (policy None) or a subset chain.

    When ``audit_every`` > 0 the subset chain records, every A-th step, the
    Pinsker TV bound between the beta conditional actually used (S_V) and
    the full-data conditional (S_N) formed from an audit draw of the full
    omega vector; the audit consumes only ``audit_rng`` so it never
    perturbs the chain itself.
    """
    beta = np.zeros(data.p)
    state = PGState(beta, np.full(data.N, 0.25), np.arange(data.N))
    B_inv = np.linalg.inv(B)
    keep = np.empty((steps, data.p))
    audit_steps: list[int] = []
    audit_tv: list[float] = []
    for i in range(burn_in + steps):
        if policy is None:
            state = gibbs_step_exact(rng, state, data, b, B)
        else:
            state = gibbs_step_subset(rng, state, data, b, B, policy)
            if audit_every and (i % audit_every == 0):
                if audit_rng is None:
                    raise ValueError("auditing requires audit_rng")
                tv = _audit_tv(audit_rng, state, data, B_inv)
                audit_steps.append(i)
                audit_tv.append(tv)
        if i >= burn_in:
            keep[i - burn_in] = state.beta
    return ChainResult(keep, np.array(audit_steps), np.array(audit_tv))


def _audit_tv(
    audit_rng: SeededRng, state: PGState, data: LogisticData, B_inv: np.ndarray
) -> float:
    """Pinsker gauge of the beta-update error at the current state."""
    omega_full = np.asarray(sample_polya_gamma(audit_rng, data.X @ state.beta))
    h = data.X.T @ data.kappa
    A_full = (data.X.T * omega_full) @ data.X + B_inv
    rows = state.subset
    scale = data.N / len(rows)
    A_sub = scale * (data.X[rows].T * omega_full[rows]) @ data.X[rows] + B_inv
    S_full = np.linalg.inv(A_full)
    S_sub = np.linalg.inv(A_sub)
    kl = gaussian_kl(S_sub @ h, S_sub, S_full @ h, S_full)
    return pinsker_tv(kl)


def simulate_logistic(
    rng: SeededRng, N: int, p: int, beta_true: np.ndarray | None = None
) -> tuple[LogisticData, np.ndarray]:
    """Synthetic standardized logistic data with known coefficients."""
    if beta_true is None:
        beta_true = np.linspace(-1.5, 1.5, p)
    X = rng.normal(size=(N, p))
    logits = X @ beta_true
    y = (rng.uniform(size=N) < 1.0 / (1.0 + np.exp(-logits))).astype(np.int64)
    return LogisticData.standardize(X, y), np.asarray(beta_true, dtype=np.float64)
