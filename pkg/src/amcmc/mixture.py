"""Exact and approximate Gibbs samplers for a latent-class model of sparse
contingency tables.

Model: cell probabilities pi(c) = sum_h nu_h prod_j lambda^(j)_{h, c_j}
with Dirichlet priors on the class weights nu and the per-variable,
per-class category profiles lambda.  The exact Gibbs sweep draws, for every
occupied cell, the latent class allocation Z(c) ~ Multinomial(n(c), nu~(c)),
then conjugate Dirichlet updates for lambda and nu.

The approximate sweep replaces each multinomial draw by a rounded Gaussian
on the high-expected-count classes H = {h : n(c) nu~_h > n_min} and an
exact multinomial on the complement, which is cheaper when a few classes
dominate a large cell.  ``tv_multinomial_vs_rounded_gaussian`` measures the
exact per-draw TV cost of that substitution at enumerable sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import multinomial as sp_multinomial
from scipy.stats import norm

from .distributions import SeededRng, sample_dirichlet, sample_multinomial, sample_mvn

__all__ = [
    "ContingencyData",
    "MixturePriors",
    "MixtureState",
    "latent_class_probs",
    "init_state",
    "gibbs_step_exact",
    "gibbs_step_approx",
    "approx_multinomial_draw",
    "tv_multinomial_vs_rounded_gaussian",
    "gaussnmin_threshold",
    "simulate_contingency",
    "cell_probability",
]

Cell = tuple[int, ...]


@dataclass(frozen=True)
class ContingencyData:
    """Sparse contingency table: only occupied cells are stored."""

    cells: dict[Cell, int]
    p: int
    d: int
    K: int

    def __post_init__(self) -> None:
        for c, n in self.cells.items():
            if len(c) != self.p or any(not 0 <= cj < self.d for cj in c):
                raise ValueError(f"bad cell index {c}")
            if n <= 0:
                raise ValueError("cell counts must be positive")

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def total(self) -> int:
        return sum(self.cells.values())

    def ordered_cells(self) -> list[Cell]:
        return sorted(self.cells)


@dataclass(frozen=True)
class MixturePriors:
    """Dirichlet hyperparameters: alpha for nu, a for every lambda."""

    alpha: float = 1.0
    a: float = 1.0

    def __post_init__(self) -> None:
        if self.alpha <= 0.0 or self.a <= 0.0:
            raise ValueError("prior concentrations must be positive")


@dataclass
class MixtureState:
    nu: np.ndarray  # (K,)
    lam: np.ndarray  # (p, K, d), simplex over the last axis
    Z: dict[Cell, np.ndarray]  # per-cell class counts, sum to n(c)


def latent_class_probs(state: MixtureState, cell: Cell) -> np.ndarray:
    """Class-membership probabilities for one cell, computed in log space
    with a max shift before normalizing."""
    with np.errstate(divide="ignore"):
        logw = np.log(state.nu).copy()
        for j, cj in enumerate(cell):
            logw += np.log(state.lam[j, :, cj])
    logw -= logw.max()
    w = np.exp(logw)
    return w / w.sum()


def init_state(rng: SeededRng, data: ContingencyData, priors: MixturePriors) -> MixtureState:
    """Prior draw of (nu, lambda) plus a deterministic Z filling."""
    K, p, d = data.K, data.p, data.d
    nu = sample_dirichlet(rng, np.full(K, priors.alpha))
    lam = np.empty((p, K, d))
    for j in range(p):
        for h in range(K):
            lam[j, h] = sample_dirichlet(rng, np.full(d, priors.a))
    Z = {}
    for c in data.ordered_cells():
        z = np.zeros(K, dtype=np.int64)
        z[0] = data.cells[c]
        Z[c] = z
    return MixtureState(nu, lam, Z)


def _conjugate_updates(
    rng: SeededRng, data: ContingencyData, priors: MixturePriors, Z: dict[Cell, np.ndarray]
) -> tuple[np.ndarray, np.ndarray]:
    K, p, d = data.K, data.p, data.d
    lam = np.empty((p, K, d))
    class_tot = np.zeros(K)
    margins = np.zeros((p, K, d))
    for c, z in Z.items():
        class_tot += z
        for j in range(p):
            margins[j, :, c[j]] += z
    for j in range(p):
        for h in range(K):
            lam[j, h] = sample_dirichlet(rng, priors.a + margins[j, h])
    nu = sample_dirichlet(rng, priors.alpha + class_tot)
    return nu, lam


def gibbs_step_exact(
    rng: SeededRng, state: MixtureState, data: ContingencyData, priors: MixturePriors
) -> MixtureState:
    """One full sweep of the three conditionals: Z, then lambda, then nu."""
    Z = {}
    for c in data.ordered_cells():
        Z[c] = sample_multinomial(rng, data.cells[c], latent_class_probs(state, c))
    nu, lam = _conjugate_updates(rng, data, priors, Z)
    return MixtureState(nu, lam, Z)


def gibbs_step_approx(
    rng: SeededRng,
    state: MixtureState,
    data: ContingencyData,
    priors: MixturePriors,
    n_min: float,
) -> MixtureState:
    """Like the exact sweep, with rounded-Gaussian allocation draws."""
    Z = {}
    for c in data.ordered_cells():
        Z[c] = approx_multinomial_draw(
            rng, data.cells[c], latent_class_probs(state, c), n_min
        )
    nu, lam = _conjugate_updates(rng, data, priors, Z)
    return MixtureState(nu, lam, Z)


def approx_multinomial_draw(
    rng: SeededRng, n_c: int, nu_tilde: np.ndarray, n_min: float
) -> np.ndarray:
    """Thresholded Gaussian-multinomial allocation draw.

    Classes with expected count above ``n_min`` get a rounded Gaussian with
    the multinomial's moments; the rest get an exact multinomial on the
    leftover count.  Negative rounded entries are clamped to zero and the
    sum constraint is restored by trimming the largest entries, so the
    output always sums to ``n_c`` with nonnegative entries.
    """
    if n_min < 0.0:
        raise ValueError("n_min must be >= 0")
    nu_tilde = np.asarray(nu_tilde, dtype=np.float64)
    K = len(nu_tilde)
    H = np.where(n_c * nu_tilde > n_min)[0]
    if len(H) == 0:
        return sample_multinomial(rng, n_c, nu_tilde)

    nu_h = nu_tilde[H]
    cov = n_c * (np.diag(nu_h) - np.outer(nu_h, nu_h))
    w = sample_mvn(rng, n_c * nu_h, cov)
    z_h = np.rint(w).astype(np.int64)
    np.maximum(z_h, 0, out=z_h)
    # trim any excess over n_c from the largest entries
    excess = int(z_h.sum()) - n_c
    while excess > 0:
        i = int(np.argmax(z_h))
        take = min(excess, int(z_h[i]))
        z_h[i] -= take
        excess -= take

    z = np.zeros(K, dtype=np.int64)
    z[H] = z_h
    remainder = n_c - int(z_h.sum())
    comp = np.setdiff1d(np.arange(K), H)
    if remainder > 0:
        if len(comp) > 0:
            mass = nu_tilde[comp].sum()
            if mass > 0.0:
                z[comp] = sample_multinomial(rng, remainder, nu_tilde[comp] / mass)
            else:
                z[comp[0]] += remainder
        else:
            # every class was Gaussian and the rounded sum fell short:
            # assign the deficit to the most probable class
            z[H[int(np.argmax(nu_h))]] += remainder
    return z


# ---------------------------------------------------------------------------
# exact TV between the multinomial and its rounded-Gaussian surrogate
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _cell_prob_1d(mean: float, sd: float, z: np.ndarray) -> np.ndarray:
    """P(W in [z - 1/2, z + 1/2]) for scalar Gaussian W."""
    return norm.cdf((z + 0.5 - mean) / sd) - norm.cdf((z - 0.5 - mean) / sd)


def _cell_prob_2d(mean: np.ndarray, cov: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Probability of the unit square around each integer pair in z
    under a bivariate Gaussian, by Gauss-Legendre quadrature of the
    conditional decomposition along the first coordinate."""
    s1 = math.sqrt(cov[0, 0])
    beta = cov[0, 1] / cov[0, 0]
    s2_cond = math.sqrt(max(cov[1, 1] - cov[0, 1] ** 2 / cov[0, 0], 1e-300))
    # nodes mapped into [z1 - 1/2, z1 + 1/2]
    w1 = z[:, 0, None] + 0.5 * _GL_NODES[None, :]
    dens = norm.pdf((w1 - mean[0]) / s1) / s1
    cmean = mean[1] + beta * (w1 - mean[0])
    upper = (z[:, 1, None] + 0.5 - cmean) / s2_cond
    lower = (z[:, 1, None] - 0.5 - cmean) / s2_cond
    inner = norm.cdf(upper) - norm.cdf(lower)
    return 0.5 * (_GL_WEIGHTS[None, :] * dens * inner).sum(axis=1)


def tv_multinomial_vs_rounded_gaussian(n: int, probs) -> float:
    """Exact TV between Multinomial(n, probs) and the law obtained by
    rounding a moment-matched Gaussian on the first K-1 coordinates (the
    last coordinate is defined by the sum constraint).

    Enumeration-based; limited to K <= 3 and n <= 200.
    """
    probs = np.asarray(probs, dtype=np.float64)
    K = len(probs)
    if K > 3 or n > 200:
        raise ValueError("enumeration limited to K <= 3 and n <= 200")
    if np.any(probs <= 0.0) or np.any(probs >= 1.0):
        raise ValueError("probs must lie strictly inside the simplex")
    if abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError("probs must sum to 1")

    head = probs[:-1]
    mean = n * head
    cov = n * (np.diag(head) - np.outer(head, head))

    # enumerate every integer point carrying non-negligible Gaussian or
    # multinomial mass on the first K-1 coordinates
    sds = np.sqrt(np.diag(cov))
    los = np.floor(np.minimum(0.0, mean - 12.0 * sds)).astype(int)
    his = np.ceil(np.maximum(n * 1.0, mean + 12.0 * sds)).astype(int)

    if K == 2:
        z1 = np.arange(los[0], his[0] + 1)
        grid = z1[:, None]
        gauss = _cell_prob_1d(mean[0], sds[0], z1.astype(float))
    else:
        a1 = np.arange(los[0], his[0] + 1)
        a2 = np.arange(los[1], his[1] + 1)
        g1, g2 = np.meshgrid(a1, a2, indexing="ij")
        grid = np.column_stack([g1.ravel(), g2.ravel()])
        gauss = _cell_prob_2d(mean, cov, grid.astype(float))

    last = n - grid.sum(axis=1)
    valid = (grid >= 0).all(axis=1) & (last >= 0)
    mult = np.zeros(len(grid))
    if valid.any():
        counts = np.column_stack([grid[valid], last[valid]])
        mult[valid] = sp_multinomial.pmf(counts, n, probs)

    # mass the Gaussian puts outside the enumerated region
    leak = max(0.0, 1.0 - float(gauss.sum()))
    return 0.5 * (float(np.abs(mult - gauss).sum()) + leak)


def gaussnmin_threshold(
    nu_tilde, H, epsilon: float, n_cells: int, C_const: float = 1.0
) -> float:
    """Advisory per-cell sample-size requirement for the Gaussian
    substitution to cost at most ``epsilon`` TV overall.

    Uses P_h = nu~_h times the number of strictly-larger-probability
    classes, and the leftover class mass as the reference nu~_K.  The
    leading constant (which depends on the number of Gaussian classes but
    is not pinned down by the analysis) is supplied by the caller as
    ``C_const``; the result is advisory, not a guarantee.
    """
    nu_tilde = np.asarray(nu_tilde, dtype=np.float64)
    H = np.asarray(H, dtype=int)
    if np.any((nu_tilde <= 0.0) | (nu_tilde >= 1.0)):
        raise ValueError("nu_tilde entries must lie strictly in (0, 1)")
    if epsilon <= 0.0 or n_cells < 1 or C_const <= 0.0:
        raise ValueError("need epsilon > 0, n_cells >= 1, C_const > 0")
    nu_h = nu_tilde[H]
    nu_K = 1.0 - nu_h.sum()
    if nu_K <= 0.0:
        nu_K = float(nu_tilde.min())
    k_h = len(H)
    total = 0.0
    for h in range(k_h):
        v = nu_h[h]
        P_h = v * float(np.sum(nu_h > v))
        total += (
            (1.0 - v)
            * (1.0 - 2.0 * v + 2.0 * v * v)
            * (1.0 + P_h / nu_K)
            / math.sqrt(v * (1.0 - v))
        )
    return C_const / (n_cells * epsilon**2) * total**2


# ---------------------------------------------------------------------------
# synthetic data
# ---------------------------------------------------------------------------


def cell_probability(nu: np.ndarray, lam: np.ndarray, cell: Cell) -> float:
    """pi(c) = sum_h nu_h prod_j lambda^(j)_{h, c_j}."""
    w = nu.copy()
    for j, cj in enumerate(cell):
        w = w * lam[j, :, cj]
    return float(w.sum())


def simulate_contingency(
    rng: SeededRng,
    p: int,
    d: int,
    K: int,
    N: int,
    priors: MixturePriors = MixturePriors(),
    query_cells: list[Cell] | None = None,
) -> tuple[ContingencyData, np.ndarray, np.ndarray, dict[Cell, float]]:
    """Ancestral draw of N observations from a prior draw of the model.

    Returns (data, true_nu, true_lam, true_pi) where true_pi maps each
    queried cell (default: every occupied cell) to its exact probability.
    The table is kept sparse throughout; dense d**p storage is never
    allocated.
    """
    if p * math.log(d) > 64 * math.log(2):
        raise ValueError("cell index space too large to enumerate safely")
    nu = sample_dirichlet(rng, np.full(K, priors.alpha))
    lam = np.empty((p, K, d))
    for j in range(p):
        for h in range(K):
            lam[j, h] = sample_dirichlet(rng, np.full(d, priors.a))

    cells: dict[Cell, int] = {}
    if N > 0:
        gen = rng._gen
        z = gen.choice(K, size=N, p=nu)
        obs = np.empty((N, p), dtype=np.int64)
        for j in range(p):
            for h in range(K):
                mask = z == h
                m = int(mask.sum())
                if m:
                    obs[mask, j] = gen.choice(d, size=m, p=lam[j, h])
        for row in obs:
            c = tuple(int(v) for v in row)
            cells[c] = cells.get(c, 0) + 1

    data = ContingencyData(cells, p=p, d=d, K=K)
    if query_cells is None:
        query_cells = data.ordered_cells()
    true_pi = {c: cell_probability(nu, lam, c) for c in query_cells}
    return data, nu, lam, true_pi
