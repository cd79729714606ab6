"""Coefficient covariance models and hyperpriors for the series prior.

Two covariance models are supported: independent coefficients with variance
``2**(-2 alpha level(i))`` and the Faber-Schauder coefficients of the
cyclically stationary Ornstein-Uhlenbeck process.  The truncation level is
``R = floor(log2 Y)`` with ``Y`` Poisson conditioned on ``Y >= 1``; the scale
satisfies ``S**2 ~ InverseGamma(shape, rate)``.

Note: in the closed forms below "sinh^{-1}" means 1/sinh (csch), not arcsinh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy import special, stats

from .fsbasis import Expansion, index_to_jk, levels

SPD_PIVOT_RTOL = 1e-12


@dataclass(frozen=True)
class Independent:
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    def to_dict(self):
        return {"type": "independent", "alpha": self.alpha}


@dataclass(frozen=True)
class OU:
    gamma: float
    sigma2: float

    def __post_init__(self):
        if not (self.gamma > 0 and self.sigma2 > 0):
            raise ValueError("gamma and sigma2 must be positive")

    def to_dict(self):
        return {"type": "ou", "gamma": self.gamma, "sigma2": self.sigma2}


@dataclass(frozen=True)
class PriorSpec:
    model: Independent | OU = field(default_factory=lambda: Independent(0.5))
    poisson_rate: float = 4.0
    scale_shape: float = 2.0
    scale_rate: float = 1.0

    def __post_init__(self):
        if not self.poisson_rate > 0:
            raise ValueError("poisson_rate must be positive")
        if not (self.scale_shape > 0 and self.scale_rate > 0):
            raise ValueError("scale hyperparameters must be positive")

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "poisson_rate": self.poisson_rate,
            "scale_shape": self.scale_shape,
            "scale_rate": self.scale_rate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PriorSpec":
        m = dict(d.get("model", {"type": "independent", "alpha": 0.5}))
        kind = m.pop("type")
        if kind == "independent":
            model = Independent(float(m["alpha"]))
        elif kind == "ou":
            model = OU(float(m["gamma"]), float(m["sigma2"]))
        else:
            raise ValueError(f"unknown covariance model {kind!r}")
        return cls(
            model=model,
            poisson_rate=float(d.get("poisson_rate", 4.0)),
            scale_shape=float(d.get("scale_shape", 2.0)),
            scale_rate=float(d.get("scale_rate", 1.0)),
        )


def unit_variance_sigma2(gamma: float) -> float:
    """sigma2 making the stationary OU variance K(t, t) equal to one."""
    return 2.0 * gamma * math.tanh(gamma / 2.0)


# -- covariance entries -------------------------------------------------------


def cov_entry_independent(i: int, ip: int, alpha: float) -> float:
    if i != ip:
        return 0.0
    j, _ = index_to_jk(i)
    return 2.0 ** (-2.0 * alpha * j)


def ou_kernel(s, t, gamma: float, sigma2: float):
    """Covariance of the cyclically stationary OU process at times s, t in [0, 1]."""
    h = np.abs(np.asarray(t, dtype=float) - np.asarray(s, dtype=float))
    num = np.exp(-gamma * h) + np.exp(-gamma * (1.0 - h))
    out = sigma2 / (2.0 * gamma) * num / (-math.expm1(-gamma))
    return out[()] if np.ndim(out) == 0 else out


def stencil(i: int) -> list[tuple[float, float]]:
    """Points and weights with Z_i = sum_w w * V(t) (midpoint displacement)."""
    if i == 1:
        return [(0.0, 1.0)]
    if i == 2:
        return [(0.5, 1.0)]
    j, k = index_to_jk(i)
    a, b = (k - 1) * 2.0**-j, k * 2.0**-j
    return [(0.5 * (a + b), 1.0), (a, -0.5), (b, -0.5)]


def _stencil_arrays(r: int) -> tuple[np.ndarray, np.ndarray]:
    """(n, 3) arrays of stencil points and weights for all indices in I_r."""
    n = 2 ** (r + 1)
    pts = np.zeros((n, 3))
    wts = np.zeros((n, 3))
    pts[0, 0], wts[0, 0] = 0.0, 1.0
    pts[1, 0], wts[1, 0] = 0.5, 1.0
    for j in range(1, r + 1):
        k = np.arange(1, 2**j + 1)
        a, b = (k - 1) * 2.0**-j, k * 2.0**-j
        sl = slice(2**j, 2 ** (j + 1))
        pts[sl, 0], pts[sl, 1], pts[sl, 2] = 0.5 * (a + b), a, b
        wts[sl] = (1.0, -0.5, -0.5)
    return pts, wts


def cov_entry_ou(i: int, ip: int, gamma: float, sigma2: float) -> float:
    """E Z_i Z_ip for the OU coefficients, as a bilinear form in kernel values."""
    total = 0.0
    for t, w in stencil(i):
        for tp, wp in stencil(ip):
            total += w * wp * float(ou_kernel(t, tp, gamma, sigma2))
    return total


def ou_covariance_block(r: int, gamma: float, sigma2: float, rows=None) -> np.ndarray:
    """OU covariance entries for rows ``rows`` (0-based, default all) against all of I_r."""
    pts, wts = _stencil_arrays(r)
    if rows is None:
        rows = slice(None)
    p_r, w_r = pts[rows], wts[rows]
    out = np.zeros((p_r.shape[0], pts.shape[0]))
    for a in range(3):
        for b in range(3):
            ww = w_r[:, a, None] * wts[None, :, b]
            if not np.any(ww):
                continue
            out += ww * ou_kernel(p_r[:, a, None], pts[None, :, b], gamma, sigma2)
    return out


@dataclass(frozen=True)
class CovMatrix:
    r: int
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        n = 2 ** (self.r + 1)
        if a.shape != (n, n):
            raise ValueError(f"covariance at cap {self.r} must be {n}x{n}")
        a.flags.writeable = False
        object.__setattr__(self, "entries", a)

    def cholesky(self) -> np.ndarray:
        return checked_cholesky(self.entries)


def checked_cholesky(a: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor; raises if a pivot falls below the SPD tolerance."""
    try:
        L = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"matrix is not positive definite: {exc}") from exc
    piv = np.diag(L) ** 2
    if piv.min() <= SPD_PIVOT_RTOL * np.max(np.diag(a)):
        raise np.linalg.LinAlgError(
            f"smallest pivot {piv.min():.3e} below tolerance; matrix is numerically singular"
        )
    return L


def covariance_matrix(r: int, spec: PriorSpec | Independent | OU) -> CovMatrix:
    """Prior covariance A^r of the coefficients in I_r."""
    if r < 0:
        raise ValueError("level cap must be nonnegative")
    model = spec.model if isinstance(spec, PriorSpec) else spec
    if isinstance(model, Independent):
        a = np.diag(2.0 ** (-2.0 * model.alpha * levels(r)))
    else:
        a = ou_covariance_block(r, model.gamma, model.sigma2)
        a = 0.5 * (a + a.T)
    cov = CovMatrix(r, a)
    cov.cholesky()
    return cov


def precision_matrix(A: CovMatrix) -> np.ndarray:
    """Inverse of the covariance, symmetrized."""
    a = A.entries
    if np.count_nonzero(a - np.diag(np.diag(a))) == 0:
        return np.diag(1.0 / np.diag(a))
    L = A.cholesky()
    Linv = scipy.linalg.solve_triangular(L, np.eye(a.shape[0]), lower=True)
    g = Linv.T @ Linv
    return 0.5 * (g + g.T)


# -- hyperpriors ----------------------------------------------------------------


def truncation_from_count(y: int) -> int:
    if y < 1:
        raise ValueError("Poisson count must be >= 1")
    return int(y).bit_length() - 1


def sample_truncation(poisson_rate: float, rng: np.random.Generator, size=None):
    """R = floor(log2 Y) with Y ~ Poisson(poisson_rate) conditioned on Y >= 1.

    Returns an int, or an integer array when ``size`` is given.
    """
    # inverse cdf of the zero-truncated Poisson
    p0 = math.exp(-poisson_rate)
    u = p0 + (1.0 - p0) * rng.random(size)
    y = np.maximum(stats.poisson.ppf(u, poisson_rate), 1.0)
    r = np.frexp(y)[1] - 1  # exact floor(log2 y) for integers
    return int(r) if size is None else r.astype(np.int64)


def _poisson_logpmf(y: np.ndarray, lam: float) -> np.ndarray:
    return y * math.log(lam) - lam - special.gammaln(y + 1.0)


def truncation_log_pmf(r: int, poisson_rate: float) -> float:
    """log P(R = r) = log P(2**r <= Y < 2**(r+1) | Y >= 1)."""
    if r < 0:
        return -math.inf
    lam = float(poisson_rate)
    lo, hi = 2**r, 2 ** (r + 1)
    log_norm = math.log(-math.expm1(-lam))
    if hi - lo <= 2**16:
        y = np.arange(lo, hi, dtype=float)
        return float(special.logsumexp(_poisson_logpmf(y, lam))) - log_norm
    if lam < lo / 2:
        # terms decay at least geometrically with ratio 1/2 past the window
        y = np.arange(lo, lo + 2**16, dtype=float)
        return float(special.logsumexp(_poisson_logpmf(y, lam))) - log_norm
    mass = stats.poisson.cdf(hi - 1, lam) - stats.poisson.cdf(lo - 1, lam)
    return math.log(mass) - log_norm


def sample_scale(shape: float, rate: float, rng: np.random.Generator, size=None):
    """S = sqrt(X) with X ~ InverseGamma(shape, rate); an array when ``size`` is given."""
    if not (shape > 0 and rate > 0):
        raise ValueError("shape and rate must be positive")
    x = rate / rng.gamma(shape, 1.0, size)
    return math.sqrt(x) if size is None else np.sqrt(x)


def scale_log_density(s: float, shape: float, rate: float) -> float:
    """Log density of S when S**2 ~ InverseGamma(shape, rate)."""
    if not s > 0:
        raise ValueError("scale must be positive")
    x = s * s
    return (
        shape * math.log(rate)
        - special.gammaln(shape)
        - (shape + 1.0) * math.log(x)
        - rate / x
        + math.log(2.0 * s)
    )


def sample_prior(r: int, s: float, A: CovMatrix, rng: np.random.Generator) -> Expansion:
    """Draw s * Z with Z ~ N(0, A^r) as an expansion at cap r."""
    if A.r != r:
        raise ValueError(f"covariance is at cap {A.r}, expected {r}")
    L = A.cholesky()
    z = L @ rng.standard_normal(L.shape[0])
    return Expansion(r, s * z)


def sample_hierarchy(spec: PriorSpec, rng: np.random.Generator, r_cap: int | None = None):
    """Draw (R, S, b) from the full hierarchy; R is clipped at ``r_cap`` if given."""
    r = sample_truncation(spec.poisson_rate, rng)
    if r_cap is not None:
        r = min(r, r_cap)
    s = sample_scale(spec.scale_shape, spec.scale_rate, rng)
    return r, s, sample_prior(r, s, covariance_matrix(r, spec), rng)
