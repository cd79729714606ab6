"""Conjugate posterior computations and the (R, S) sampler.

Given truncation r and scale s the drift is ``s * sum_i z_i psi_i`` with
``z ~ N(0, A^r)``, so the likelihood is Gaussian in z::

    log p(X | r, s, z) = s z'mu - s^2 z'Gz / 2

with ``mu_i = int psi_i(X) dX`` and ``G_ii' = int psi_i(X) psi_i'(X) dt``.
The conditional posterior of z has precision ``W = s^2 G + A^{-1}`` and mean
``W^{-1} s mu``; integrating z out gives the marginal likelihood of (r, s),
on which the sampler runs Metropolis moves before drawing z exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from . import _kernels
from .fsbasis import Expansion, interp_nodes, synthesize
from .prior import (
    CovMatrix,
    PriorSpec,
    checked_cholesky,
    covariance_matrix,
    precision_matrix,
    scale_log_density,
    truncation_log_pmf,
)
from .sdesim import ObservedPath, iter_path_chunks

# -- sufficient statistics ------------------------------------------------------


class StatsAccumulator:
    """Streaming accumulation of (mu, G) at cap r over chunks of (points, increments).

    Each stored Grammian entry is summed over time in the same order whatever
    the cap, so statistics at cap r are exactly the leading block of those at
    any larger cap.
    """

    def __init__(self, r: int):
        if r < 0:
            raise ValueError("level cap must be nonnegative")
        self.r = r
        n = 2 ** (r + 1)
        self.mu = np.zeros(n)
        self.g = np.zeros((n, r + 2))
        self.count = 0

    def add(self, x: np.ndarray, incr: np.ndarray) -> None:
        x = np.ascontiguousarray(x, dtype=float)
        incr = np.ascontiguousarray(incr, dtype=float)
        if x.shape != incr.shape:
            raise ValueError("points and increments must have equal length")
        _kernels.accumulate_stats(x, incr, self.r, self.mu, self.g)
        self.count += x.size

    def merge(self, other: "StatsAccumulator") -> None:
        """Add another accumulator's partial sums (a later time segment)."""
        if other.r != self.r:
            raise ValueError("cannot merge accumulators at different caps")
        self.mu += other.mu
        self.g += other.g
        self.count += other.count

    def finalize(self, T: float, mu_weight: float = 1.0, gram_weight: float = 1.0) -> "SufficientStats":
        rows, slots, cols = _gram_layout(self.r)
        vals = self.g[rows, slots] * gram_weight
        return SufficientStats(
            r=self.r,
            mu=self.mu * mu_weight,
            gram=_symmetric_csr(rows, cols, vals, self.mu.size),
            T=float(T),
        )


def _ancestor(idx: np.ndarray, lev: int, j: int) -> np.ndarray:
    """0-based index of the level-j ancestor of 0-based indices at level ``lev`` >= j."""
    k0 = idx - 2**lev  # 0-based position within its level
    return 2**j + (k0 >> (lev - j))


_LAYOUT_CACHE: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def _gram_layout(r: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(row, slot, col) of every structurally nonzero lower-triangle Grammian entry.

    Row i stores its products with psi_1 (slot 0), psi_{0,1} (slot 1) and
    its ancestor at each level 1..level(i) (slots 2..level(i)+1).
    """
    if r in _LAYOUT_CACHE:
        return _LAYOUT_CACHE[r]
    rows = [np.array([0, 1, 1])]
    slots = [np.array([0, 0, 1])]
    cols = [np.array([0, 0, 1])]
    for lev in range(1, r + 1):
        idx = np.arange(2**lev, 2 ** (lev + 1))
        for b in range(lev + 2):
            rows.append(idx)
            slots.append(np.full(idx.size, b))
            cols.append(np.full(idx.size, b) if b <= 1 else _ancestor(idx, lev, b - 1))
    out = (np.concatenate(rows), np.concatenate(slots), np.concatenate(cols))
    _LAYOUT_CACHE[r] = out
    return out


def _symmetric_csr(rows, cols, vals, n) -> sp.csr_matrix:
    off = rows != cols
    r_all = np.concatenate([rows, cols[off]])
    c_all = np.concatenate([cols, rows[off]])
    v_all = np.concatenate([vals, vals[off]])
    return sp.csr_matrix((v_all, (r_all, c_all)), shape=(n, n))


@dataclass(frozen=True)
class SufficientStats:
    """mu and the sparse symmetric Grammian at cap r; T is the horizon (or sample size)."""

    r: int
    mu: np.ndarray = field(repr=False)
    gram: sp.csr_matrix = field(repr=False)
    T: float

    def restrict(self, r: int) -> "SufficientStats":
        """Leading block at a smaller cap."""
        if r > self.r or r < 0:
            raise ValueError(f"cannot restrict cap {self.r} stats to {r}")
        n = 2 ** (r + 1)
        return SufficientStats(r, self.mu[:n].copy(), self.gram[:n, :n].tocsr(), self.T)

    def dense_gram(self, r: int | None = None) -> np.ndarray:
        n = 2 ** ((self.r if r is None else r) + 1)
        return self.gram[:n, :n].toarray()


def sufficient_stats(path: ObservedPath, r: int) -> SufficientStats:
    """Left-point Ito sums mu_i and Riemann sums G_ii' along an observed path."""
    acc = StatsAccumulator(r)
    acc.add(path.values[:-1], path.increments)
    return acc.finalize(path.T, gram_weight=path.dt)


def simulate_stats(drift: Expansion, x0: float, T: float, dt: float, rng, r: int) -> SufficientStats:
    """Sufficient statistics of a simulated path without storing the path."""
    acc = StatsAccumulator(r)
    for x, dx in iter_path_chunks(drift, x0, T, dt, rng):
        acc.add(x, dx)
    return acc.finalize(T, gram_weight=dt)


def regression_stats(x, y, noise_sd: float, r: int) -> SufficientStats:
    """Fixed-design regression analogue: mu = sum psi(x) y / sd^2, G = sum psi psi' / sd^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size == 0:
        raise ValueError("regression data must be nonempty")
    acc = StatsAccumulator(r)
    acc.add(x, y)
    w = 1.0 / noise_sd**2
    return acc.finalize(float(x.size), mu_weight=w, gram_weight=w)


# -- conjugate posterior ----------------------------------------------------------


@dataclass(frozen=True)
class PosteriorGaussian:
    r: int
    s: float
    mean: np.ndarray = field(repr=False)
    precision: np.ndarray = field(repr=False)

    def covariance(self) -> np.ndarray:
        L = checked_cholesky(self.precision)
        Linv = scipy.linalg.solve_triangular(L, np.eye(L.shape[0]), lower=True)
        return Linv.T @ Linv


def _check_caps(stats: SufficientStats, A: CovMatrix) -> SufficientStats:
    if A.r > stats.r:
        raise ValueError(f"covariance cap {A.r} exceeds statistics cap {stats.r}")
    return stats if A.r == stats.r else stats.restrict(A.r)


def conditional_posterior(stats: SufficientStats, s: float, A: CovMatrix) -> PosteriorGaussian:
    """z | X, r, s ~ N(W^{-1} s mu, W^{-1}) with W = s^2 G + A^{-1}."""
    stats = _check_caps(stats, A)
    W = s * s * stats.dense_gram() + precision_matrix(A)
    W = 0.5 * (W + W.T)
    L = checked_cholesky(W)
    mean = scipy.linalg.cho_solve((L, True), s * stats.mu)
    return PosteriorGaussian(A.r, float(s), mean, W)


def log_marginal(stats: SufficientStats, s: float, A: CovMatrix) -> float:
    """log of the integral of exp(s z'mu - s^2 z'Gz/2) against N(0, A)(dz).

    Computed as -log det(I + s^2 L'GL)/2 + s^2 m'(I + s^2 L'GL)^{-1} m / 2 with
    A = LL' and m = L'mu, which equals -log det A/2 - log det W/2 + (s mu)'W^{-1}(s mu)/2.
    """
    stats = _check_caps(stats, A)
    L = A.cholesky()
    n = L.shape[0]
    M = np.eye(n) + s * s * (L.T @ stats.dense_gram() @ L)
    M = 0.5 * (M + M.T)
    C = checked_cholesky(M)
    m = L.T @ stats.mu
    y = scipy.linalg.solve_triangular(C, m, lower=True)
    return float(-np.sum(np.log(np.diag(C))) + 0.5 * s * s * np.dot(y, y))


class SpectralMarginal:
    """Cached factorization making log_marginal(s) O(n) for a fixed cap.

    With A = LL' and L'GL = U diag(lam) U', W^{-1} = V diag(d) V' where
    V = LU and d = 1/(1 + s^2 lam).
    """

    def __init__(self, stats: SufficientStats, A: CovMatrix):
        stats = _check_caps(stats, A)
        L = A.cholesky()
        M = L.T @ stats.dense_gram() @ L
        lam, U = np.linalg.eigh(0.5 * (M + M.T))
        self.r = A.r
        self.lam = np.maximum(lam, 0.0)
        self.V = L @ U
        self.c = self.V.T @ stats.mu

    def log_marginal(self, s: float) -> float:
        t = s * s * self.lam
        return float(-0.5 * np.sum(np.log1p(t)) + 0.5 * s * s * np.sum(self.c**2 / (1.0 + t)))

    def mean(self, s: float) -> np.ndarray:
        d = 1.0 / (1.0 + s * s * self.lam)
        return self.V @ (d * s * self.c)

    def draw(self, s: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """(exact conditional draw of z, conditional mean of z)."""
        d = 1.0 / (1.0 + s * s * self.lam)
        m = d * s * self.c
        xi = rng.standard_normal(self.lam.size)
        return self.V @ (m + np.sqrt(d) * xi), self.V @ m


# -- sampler ------------------------------------------------------------------------


@dataclass
class ChainState:
    r: int
    s: float
    z: np.ndarray = field(repr=False)
    log_marginal: float
    cond_mean: np.ndarray | None = field(default=None, repr=False)
    r_accepted: bool | None = None
    s_accepted: bool | None = None

    def drift(self) -> Expansion:
        """The sampled drift s * sum z_i psi_i."""
        return Expansion(self.r, self.s * self.z)


class MarginalPosterior:
    """Unnormalized log posterior of (r, s) with coefficients integrated out."""

    def __init__(self, stats: SufficientStats, spec: PriorSpec, r_max: int):
        if r_max > stats.r:
            raise ValueError(f"r_max={r_max} exceeds statistics cap {stats.r}")
        self.stats = stats
        self.spec = spec
        self.r_max = r_max
        self._cache: dict[int, SpectralMarginal] = {}
        self._log_pr = [truncation_log_pmf(r, spec.poisson_rate) for r in range(r_max + 1)]

    def spectral(self, r: int) -> SpectralMarginal:
        if r not in self._cache:
            self._cache[r] = SpectralMarginal(self.stats, covariance_matrix(r, self.spec))
        return self._cache[r]

    def log_marginal(self, r: int, s: float) -> float:
        return self.spectral(r).log_marginal(s)

    def log_post(self, r: int, s: float) -> float:
        return (
            self.log_marginal(r, s)
            + self._log_pr[r]
            + scale_log_density(s, self.spec.scale_shape, self.spec.scale_rate)
        )

    def log_accept_s(self, r: int, s: float, s_new: float) -> float:
        """Log Metropolis-Hastings ratio of a log-normal scale move.

        The log s' - log s term is the proposal correction; computing the
        ratio as a difference of per-state terms makes it exactly antisymmetric.
        """
        return (self.log_post(r, s_new) + math.log(s_new)) - (self.log_post(r, s) + math.log(s))

    def log_accept_r(self, r: int, r_new: int, s: float) -> float:
        if not 0 <= r_new <= self.r_max:
            return -math.inf
        return self.log_post(r_new, s) - self.log_post(r, s)


def mcmc_run(
    data: ObservedPath | SufficientStats,
    spec: PriorSpec,
    iters: int,
    r_max: int,
    step_s: float,
    rng: np.random.Generator,
    r0: int = 0,
    s0: float = 1.0,
    move_r: bool = True,
    move_s: bool = True,
) -> list[ChainState]:
    """Metropolis-within-Gibbs over (r, s) with exact conditional draws of z.

    Each iteration proposes r -> r +/- 1 (proposals outside 0..r_max are
    rejected), then s -> s * exp(step_s * N(0, 1)), then draws z from its
    conditional posterior given the current (r, s).
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if not 0 <= r0 <= r_max:
        raise ValueError("initial truncation outside 0..r_max")
    stats = data if isinstance(data, SufficientStats) else sufficient_stats(data, r_max)
    post = MarginalPosterior(stats, spec, r_max)
    r, s = int(r0), float(s0)
    lp = post.log_post(r, s)
    chain: list[ChainState] = []
    for _ in range(iters):
        r_acc = s_acc = None
        if move_r:
            r_new = r + (1 if rng.random() < 0.5 else -1)
            u = 1.0 - rng.random()  # in (0, 1], safe for log
            r_acc = False
            if 0 <= r_new <= r_max:
                lp_new = post.log_post(r_new, s)
                if math.log(u) < lp_new - lp:
                    r, lp, r_acc = r_new, lp_new, True
        if move_s:
            s_new = s * math.exp(step_s * rng.standard_normal())
            u = 1.0 - rng.random()  # in (0, 1], safe for log
            lp_new = post.log_post(r, s_new)
            s_acc = False
            if math.log(u) < (lp_new + math.log(s_new)) - (lp + math.log(s)):
                s, lp, s_acc = s_new, lp_new, True
        z, zm = post.spectral(r).draw(s, rng)
        chain.append(ChainState(r, s, z, post.log_marginal(r, s), zm, r_acc, s_acc))
    return chain


def acceptance_rates(chain: Sequence[ChainState]) -> dict:
    def rate(flags):
        flags = [f for f in flags if f is not None]
        return float(np.mean(flags)) if flags else float("nan")

    return {
        "r": rate([c.r_accepted for c in chain]),
        "s": rate([c.s_accepted for c in chain]),
    }


def _kept(chain: Sequence[ChainState], burn_in: int) -> Sequence[ChainState]:
    if burn_in < 0 or burn_in >= len(chain):
        raise ValueError(f"burn_in={burn_in} must lie in [0, {len(chain)})")
    return chain[burn_in:]


def posterior_mean_drift(chain: Sequence[ChainState], burn_in: int, grid_cap: int) -> Expansion:
    """Average over kept states of s times the conditional mean of z.

    States without a cached conditional mean contribute s * z.  Expansions at
    smaller caps are embedded exactly by zero detail coefficients, which is
    the same as resampling on the grid_cap dyadic grid and re-expanding.
    """
    kept = _kept(chain, burn_in)
    if max(c.r for c in kept) > grid_cap:
        raise ValueError("grid_cap is below the largest truncation in the chain")
    acc = np.zeros(2 ** (grid_cap + 1))
    for c in kept:
        z = c.cond_mean if c.cond_mean is not None else c.z
        acc[: z.size] += c.s * z
    return Expansion(grid_cap, acc / len(kept))


def credible_band(chain: Sequence[ChainState], burn_in: int, level: float, ngrid: int):
    """Pointwise central band of posterior drift draws holding mass ``level``.

    Returns (grid, lower, upper) with the (1-level)/2 and (1+level)/2
    empirical quantiles on the grid m/ngrid; level = 1 gives the min/max envelope.
    """
    if not 0 < level <= 1:
        raise ValueError("level must lie in (0, 1]")
    kept = _kept(chain, burn_in)
    x = np.arange(ngrid) / ngrid
    draws = np.empty((len(kept), ngrid))
    for n, c in enumerate(kept):
        draws[n] = interp_nodes(synthesize(c.s * c.z), x)
    lo = np.quantile(draws, (1.0 - level) / 2.0, axis=0)
    hi = np.quantile(draws, (1.0 + level) / 2.0, axis=0)
    return x, lo, hi


def draws_on_grid(chain: Sequence[ChainState], burn_in: int, ngrid: int) -> np.ndarray:
    kept = _kept(chain, burn_in)
    x = np.arange(ngrid) / ngrid
    return np.array([interp_nodes(synthesize(c.s * c.z), x) for c in kept])
