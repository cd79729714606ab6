"""Executable checks of the analytic bounds the method relies on.

Each check returns a :class:`CheckReport` whose ``worst_margin`` is the signed
slack of the tightest instance examined; ``passed`` is ``worst_margin >= 0``.
Exact checks compare closed forms with zero slack.  Monte Carlo checks allow
three standard errors, and say so in ``details["kind"]``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, special

from .fsbasis import (
    Expansion,
    approximation_bound,
    besov_seminorm,
    expand_dyadic,
    levels,
    lp_over_l2_bound,
    norm,
    sup_over_l2_bound,
    truncate,
)
from .prior import (
    OU,
    covariance_matrix,
    ou_covariance_block,
    ou_kernel,
    precision_matrix,
    scale_log_density,
    truncation_log_pmf,
)

MC_SE = 3.0
ROUNDING = 1e-12

# Covariance bound constants: diagonal lower/upper factors on 2**-l sigma2 / 4,
# level-0 cross term and deeper off-diagonal factors.
COV_CONSTANTS = {"diag_lower": 0.95, "diag_upper": 1.0, "level0": 0.20, "offdiag": 0.37}
# Sharper constants from the proof; reported, never asserted.
SHARP_DIAG_LOWER = 0.9715


@dataclass
class CheckReport:
    name: str
    passed: bool
    worst_margin: float
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        self.worst_margin = float(self.worst_margin)
        self.passed = bool(self.worst_margin >= 0)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CheckReport":
        return cls(d["name"], bool(d["passed"]), float(d["worst_margin"]), dict(d["details"]))


def reports_to_json(reports: list[CheckReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True)


def reports_from_json(s: str) -> list[CheckReport]:
    return [CheckReport.from_dict(d) for d in json.loads(s)]


# -- probability lemmas -------------------------------------------------------------


def normal_ball_bound(theta, eps):
    return np.exp(np.log(eps) - eps**2 - theta**2 + 0.5 * math.log(2.0 / math.pi))


def normal_ball_exact(theta, eps):
    return special.ndtr(theta + eps) - special.ndtr(theta - eps)


def check_normal_ball(theta: float, eps: float) -> CheckReport:
    """P(|X - theta| <= eps) for X ~ N(0, 1) against its exponential lower bound."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    exact = float(normal_ball_exact(theta, eps))
    bound = float(normal_ball_bound(theta, eps))
    return CheckReport(
        "normal_ball",
        True,
        exact - bound,
        {"kind": "exact", "theta": theta, "eps": eps, "exact": exact, "bound": bound},
    )


def sweep_normal_ball(n: int = 100) -> CheckReport:
    """Normal-ball bound on an n x n grid of theta in [-3, 3], eps in (0, 2]."""
    theta = np.linspace(-3.0, 3.0, n)
    eps = np.linspace(2.0 / n, 2.0, n)
    th, ep = np.meshgrid(theta, eps, indexing="ij")
    margin = normal_ball_exact(th, ep) - normal_ball_bound(th, ep)
    k = np.unravel_index(np.argmin(margin), margin.shape)
    return CheckReport(
        "normal_ball_grid",
        True,
        float(margin[k]),
        {"kind": "exact", "grid": n, "argmin_theta": float(th[k]), "argmin_eps": float(ep[k])},
    )


def check_ig_tail(shape: float, rate: float, M: float, draws: int, rng) -> CheckReport:
    """Empirical P(X >= M), X ~ InverseGamma(shape, rate), against rate**shape M**-shape / Gamma(shape)."""
    if not M > 0:
        raise ValueError("M must be positive")
    bound = math.exp(shape * math.log(rate) - special.gammaln(shape) - shape * math.log(M))
    x = rate / rng.gamma(shape, 1.0, size=draws)
    p_hat = float(np.mean(x >= M))
    se = math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / draws)
    exact = float(special.gammainc(shape, rate / M))
    return CheckReport(
        "ig_tail",
        True,
        bound + MC_SE * se - p_hat,
        {
            "kind": "monte_carlo",
            "shape": shape,
            "rate": rate,
            "M": M,
            "draws": draws,
            "empirical": p_hat,
            "exact": exact,
            "bound": bound,
        },
    )


def _random_spd(dim: int, rng) -> np.ndarray:
    b = rng.standard_normal((dim, dim))
    return b @ b.T + 0.1 * np.eye(dim)


def _in_set(x: np.ndarray, kind: str, size) -> np.ndarray:
    if kind == "box":
        return np.all(np.abs(x) <= size, axis=1)
    return np.sum(x * x, axis=1) <= size * size


def check_anderson(dim: int, draws: int, rng, cases: int = 50, perturb: float = 1.0) -> CheckReport:
    """P(Y in C) <= P(X in C) for centered Gaussians with Cov X <= Cov Y.

    Sets C are random centered boxes and balls.  X and Y are driven by the
    same standard normals (paired design), so the standard error is that of
    the paired difference and equal covariances give exactly equal estimates.
    ``perturb`` scales the added covariance; 0 makes the two laws equal.
    """
    if dim not in (1, 2, 3):
        raise ValueError("dim must be 1, 2 or 3")
    worst, worst_case = math.inf, None
    for c in range(cases):
        sx = _random_spd(dim, rng)
        extra = rng.standard_normal((dim, dim))
        sy = sx + perturb * (extra @ extra.T)
        kind = "box" if c % 2 == 0 else "ball"
        size = rng.uniform(0.3, 2.0, size=dim) if kind == "box" else rng.uniform(0.5, 2.5)
        n = rng.standard_normal((draws, dim))
        inx = _in_set(n @ np.linalg.cholesky(sx).T, kind, size)
        iny = _in_set(n @ np.linalg.cholesky(sy).T, kind, size)
        d = iny.astype(float) - inx.astype(float)
        se = float(np.std(d) / math.sqrt(draws))
        margin = -float(np.mean(d)) + MC_SE * se
        if margin < worst:
            worst, worst_case = margin, {"case": c, "set": kind, "p_x": float(inx.mean()), "p_y": float(iny.mean())}
    return CheckReport(
        f"anderson_dim{dim}",
        True,
        worst,
        {"kind": "monte_carlo", "dim": dim, "cases": cases, "draws": draws, "tightest": worst_case},
    )


def check_anderson_exact_1d() -> CheckReport:
    """One-dimensional instance with closed-form probabilities: var 1 vs var 4 on [-1, 1]."""
    px = float(special.erf(1.0 / math.sqrt(2.0)))
    py = float(special.erf(0.5 / math.sqrt(2.0)))
    return CheckReport("anderson_exact_1d", True, px - py, {"kind": "exact", "p_x": px, "p_y": py})


# -- entropy of the sieve -----------------------------------------------------------


def entropy_constant(alpha: float) -> float:
    return 1.0 / (1.0 - 2.0**-alpha)


def entropy_bound(r: int, t: float, eps: float, alpha: float) -> float:
    return 2 ** (r + 1) * math.log(3.0 * entropy_constant(alpha) * t / eps)


def _net_centers(half_width: float, radius: float) -> np.ndarray:
    """Centers of a minimal radius-net of [-half_width, half_width] in one coordinate."""
    count = max(1, math.ceil(half_width / radius))
    centers = -half_width + radius * (2.0 * np.arange(count) + 1.0)
    return np.minimum(centers, half_width)


def check_entropy_bound(
    r: int, t: float, eps: float, alpha: float, rng=None, samples: int = 2000
) -> CheckReport:
    """Explicit sup-norm eps-net of the sieve {cap r, alpha-seminorm <= t}.

    The net is a product of one-dimensional grids with radius
    eps * 2**(-j alpha) / A_alpha at level j.  Its size is compared with the
    entropy bound, and coverage is confirmed by snapping random members of
    the sieve (including box corners) to the net and measuring the exact sup
    distance.
    """
    if not 0 <= r <= 3:
        raise ValueError("r must lie in 0..3")
    if not (t > 0 and eps > 0 and alpha > 0):
        raise ValueError("t, eps and alpha must be positive")
    a_alpha = entropy_constant(alpha)
    if eps > 3.0 * a_alpha * t:
        raise ValueError("eps exceeds 3 A_alpha t; the entropy bound is negative there")
    rng = np.random.default_rng(0) if rng is None else rng
    lev = levels(r)
    half = t * 2.0 ** (-alpha * lev)
    radius = eps * 2.0 ** (-alpha * lev) / a_alpha
    grids = [_net_centers(h, rad) for h, rad in zip(half, radius)]
    log_count = float(sum(math.log(g.size) for g in grids))
    bound = entropy_bound(r, t, eps, alpha)

    u = rng.uniform(-1.0, 1.0, size=(samples, lev.size))
    corners = rng.choice([-1.0, 1.0], size=(samples // 4, lev.size))
    worst = 0.0
    for z in np.vstack([u, corners]) * half:
        snapped = np.array([g[np.argmin(np.abs(g - zi))] for g, zi in zip(grids, z)])
        worst = max(worst, norm(Expansion(r, z - snapped), math.inf))
    margin = min(bound - log_count, (eps - worst) / eps)
    return CheckReport(
        "entropy_bound",
        True,
        margin,
        {
            "kind": "exact",
            "r": r,
            "t": t,
            "eps": eps,
            "alpha": alpha,
            "log_count": log_count,
            "bound": bound,
            "max_snap_distance": worst,
        },
    )


# -- covariance of the periodic OU coefficients ---------------------------------------


def _cov_margins(A: np.ndarray, r: int, sigma2: float, c: dict) -> dict:
    lev = levels(r).astype(float)
    n = lev.size
    deep = np.arange(n) >= 2
    diag = np.diag(A)[deep] / (2.0 ** -lev[deep] * sigma2 / 4.0)
    out = {
        "diag_lower": float(np.min(diag) - c["diag_lower"]),
        "diag_upper": float(c["diag_upper"] - np.max(diag)),
        "diag_ratio_min": float(np.min(diag)),
        "diag_ratio_max": float(np.max(diag)),
    }
    # one index at level 0 (i <= 2), the other deeper
    cross = np.abs(A[:2, 2:]) / (sigma2 * 2.0 ** (-1.5 * lev[2:]))
    out["level0_ratio_max"] = float(np.max(cross))
    out["level0"] = float(c["level0"] - out["level0_ratio_max"])
    # both deeper, off the diagonal
    sub = np.abs(A[2:, 2:]) / (sigma2 * 2.0 ** (-1.5 * (lev[2:, None] + lev[None, 2:])))
    np.fill_diagonal(sub, 0.0)
    out["offdiag_ratio_max"] = float(np.max(sub))
    out["offdiag"] = float(c["offdiag"] - out["offdiag_ratio_max"])
    return out


def check_cov_bounds(gamma: float, sigma2: float, r_max: int, constants: dict | None = None) -> CheckReport:
    """Every covariance bound for the OU coefficients at all index pairs up to level r_max.

    The margin is the smallest of the normalized slacks (bound factor minus
    observed ratio).  Closed forms of the level-0 block are checked too.
    ``constants`` overrides entries of :data:`COV_CONSTANTS`.
    """
    if not 0 < gamma <= 1.5:
        raise ValueError("gamma must lie in (0, 1.5]")
    c = dict(COV_CONSTANTS, **(constants or {}))
    A = ou_covariance_block(r_max, gamma, sigma2)
    m = _cov_margins(A, r_max, sigma2, c)
    a11 = sigma2 / (2.0 * gamma) / math.tanh(gamma / 2.0)
    a12 = sigma2 / (2.0 * gamma) / math.sinh(gamma / 2.0)
    closed = max(abs(A[0, 0] - a11), abs(A[1, 1] - a11), abs(A[0, 1] - a12)) / a11
    worst = min(m["diag_lower"], m["diag_upper"], m["level0"], m["offdiag"])
    if closed > ROUNDING:
        worst = min(worst, ROUNDING - closed)
    details = {"kind": "exact", "gamma": gamma, "sigma2": sigma2, "r_max": r_max, "constants": c}
    details.update(m)
    details["closed_form_rel_err"] = closed
    details["sharp_diag_lower_margin"] = m["diag_ratio_min"] - SHARP_DIAG_LOWER
    details["sharp_level0_factor"] = 0.0095 * gamma**2 * (1.0 + gamma / 2.0)
    details["sharp_offdiag_factor"] = 0.061 * gamma * (1.0 + gamma)
    return CheckReport("cov_bounds", True, worst, details)


def check_assumption_2b(gamma: float, sigma2: float, r_max: int) -> CheckReport:
    """Sandwich c1 2**-l <= A_ii <= c2 2**-l, |A_ii'| <= c3 2**(-1.5 (l + l')) for i, i' >= 3.

    The constants are c1 = 0.95 sigma2 / 4, c2 = sigma2 / 4 and
    c3 = 0.061 sigma2 gamma (1 + gamma).  Whether 3 c3 < c1 holds is reported
    but not part of the verdict.
    """
    c1, c2 = 0.95 * sigma2 / 4.0, sigma2 / 4.0
    c3 = 0.061 * sigma2 * gamma * (1.0 + gamma)
    A = ou_covariance_block(r_max, gamma, sigma2)[2:, 2:]
    lev = levels(r_max)[2:].astype(float)
    d = np.diag(A) * 2.0**lev
    off = np.abs(A) * 2.0 ** (1.5 * (lev[:, None] + lev[None, :]))
    np.fill_diagonal(off, 0.0)
    worst = min((d.min() - c1) / c1, (c2 - d.max()) / c2, (c3 - off.max()) / c3)
    return CheckReport(
        "assumption_2b",
        True,
        worst,
        {
            "kind": "exact",
            "gamma": gamma,
            "c1": c1,
            "c2": c2,
            "c3": c3,
            "three_c3_below_c1": bool(3.0 * c3 < c1),
        },
    )


def disjoint_mask(r: int) -> np.ndarray:
    """Boolean matrix of index pairs in I_r whose supports have disjoint interiors."""
    n = 2 ** (r + 1)
    lev = levels(r)
    idx = np.arange(1, n + 1)
    k = idx - 2.0**lev
    lo = np.where(idx <= 2, 0.0, (k - 1.0) * 2.0**-lev)
    hi = np.where(idx <= 2, 1.0, k * 2.0**-lev)
    return (hi[:, None] <= lo[None, :]) | (hi[None, :] <= lo[:, None])


def check_precision_sparsity(
    gamma: float, sigma2: float, r: int, tol: float = 1e-8, witness: float | None = None, model=None
) -> CheckReport:
    """Precision entries vanish on disjoint pairs and not on nested ones.

    Entries are compared on the partial-correlation scale
    ``|G_ii'| / sqrt(G_ii G_i'i')``, which is scale free and never smaller
    than ``|G_ii'| / max|G|``.  Disjoint-support pairs must stay below ``tol``;
    for every level j >= 1 at least one overlapping pair (i, i') with
    level(i) = j must exceed ``witness`` (default ``tol``).
    """
    if not 0 <= r <= 6:
        raise ValueError("r must lie in 0..6")
    witness = tol if witness is None else witness
    model = OU(gamma, sigma2) if model is None else model
    G = precision_matrix(covariance_matrix(r, model))
    d = np.sqrt(np.diag(G))
    rel = np.abs(G) / np.outer(d, d)
    mask = disjoint_mask(r)
    worst_zero = float(np.max(rel[mask])) if mask.any() else 0.0
    margins = [(tol - worst_zero) / tol]
    lev = levels(r)
    per_level = {}
    offdiag = ~mask & ~np.eye(lev.size, dtype=bool)
    for j in range(1, r + 1):
        rows = lev == j
        vals = rel[rows][offdiag[rows]]
        per_level[j] = float(vals.max())
        if not isinstance(model, OU):
            continue  # independent coefficients have a diagonal precision
        margins.append((per_level[j] - witness) / witness)
    return CheckReport(
        "precision_sparsity",
        True,
        min(margins) if isinstance(model, OU) else margins[0],
        {
            "kind": "exact",
            "model": model.to_dict(),
            "r": r,
            "tol": tol,
            "witness": witness,
            "max_rel_on_disjoint": worst_zero,
            "max_rel_nested_by_level": {str(k): v for k, v in per_level.items()},
        },
    )


def check_factor_identity(gamma: float, sigma2: float, rng, triples: int = 100) -> CheckReport:
    """K(s,x)/2 - K((s+t)/2, x) + K(t,x)/2 = 2 sinh(gamma (t-s)/4)**2 K((s+t)/2, x) for x outside (s, t)."""
    worst = 0.0
    for _ in range(triples):
        s, t = np.sort(rng.uniform(0.0, 1.0, size=2))
        x = rng.uniform(0.0, s) if rng.random() < s / (s + 1.0 - t) else rng.uniform(t, 1.0)
        m = 0.5 * (s + t)
        lhs = 0.5 * ou_kernel(s, x, gamma, sigma2) - ou_kernel(m, x, gamma, sigma2) + 0.5 * ou_kernel(
            t, x, gamma, sigma2
        )
        rhs = 2.0 * math.sinh(gamma * (t - s) / 4.0) ** 2 * ou_kernel(m, x, gamma, sigma2)
        scale = max(1.0, float(ou_kernel(m, x, gamma, sigma2)))
        worst = max(worst, abs(lhs - rhs) / scale)
    return CheckReport(
        "factor_identity",
        True,
        ROUNDING - worst,
        {"kind": "exact", "gamma": gamma, "triples": triples, "max_abs_err": worst},
    )


# -- basis invariants ---------------------------------------------------------------------


def _random_smooth(cap: int, beta: float, rng) -> Expansion:
    lev = levels(cap)
    return Expansion(cap, rng.uniform(-1.0, 1.0, size=lev.size) * 2.0 ** (-beta * lev))


def check_approximation(rng, cases: int = 5) -> CheckReport:
    """Sup-norm truncation error against seminorm * 2**(-r beta) / (2**beta - 1)."""
    worst, arg = math.inf, None
    for beta in (0.5, 1.0, 1.5):
        for r in range(1, 9):
            for _ in range(cases):
                e = _random_smooth(r + 4, beta, rng)
                if rng.random() < 0.5:  # all-positive signs are the hardest case
                    e = Expansion(e.r, np.abs(e.coeffs))
                err = norm(e - truncate(e, r).pad(e.r), math.inf)
                bound = approximation_bound(besov_seminorm(e, beta).seminorm, beta, r)
                m = (bound - err) / bound
                if m < worst:
                    worst, arg = m, {"beta": beta, "r": r, "error": err, "bound": bound}
    return CheckReport("approximation_lemma", True, worst, {"kind": "exact", "tightest": arg})


def check_coefficient_bound(rng, cases: int = 200) -> CheckReport:
    """Every Faber-Schauder coefficient of f is at most 2 sup|f| in absolute value."""
    worst = math.inf
    for c in range(cases):
        r = c % 8
        v = rng.standard_normal(2 ** (r + 1))
        if c % 3 == 0:
            v = np.cumsum(v)
        e = expand_dyadic(v)
        sup = float(np.max(np.abs(v)))
        worst = min(worst, (2.0 * sup - float(np.max(np.abs(e.coeffs)))) / (2.0 * sup))
    return CheckReport("coefficient_bound", True, worst, {"kind": "exact", "cases": cases})


def check_modulus_bounds(rng, cases: int = 60) -> CheckReport:
    """||e||_p / ||e||_2 against the cap-r bounds for p in {3, 4, 8, inf}."""
    worst, arg = math.inf, None
    for c in range(cases):
        r = c % 7
        n = 2 ** (r + 1)
        kind = c % 3
        if kind == 0:
            v = rng.standard_normal(n)
        elif kind == 1:
            v = np.zeros(n)
            v[rng.integers(n)] = 1.0
        else:
            v = np.zeros(n)
            v[rng.choice(n, size=min(3, n), replace=False)] = rng.standard_normal(min(3, n))
            if not np.any(v):
                v[0] = 1.0
        e = expand_dyadic(v)
        l2 = norm(e, 2)
        for p in (3.0, 4.0, 8.0, math.inf):
            ratio = norm(e, p) / l2
            bound = sup_over_l2_bound(r) if math.isinf(p) else lp_over_l2_bound(r, p)
            m = (bound - ratio) / bound
            if m < worst:
                worst, arg = m, {"r": r, "p": "inf" if math.isinf(p) else p, "ratio": ratio, "bound": bound}
    return CheckReport("modulus_bounds", True, worst, {"kind": "exact", "tightest": arg})


def check_ratio_inequality(rng, cases: int = 10000) -> CheckReport:
    """(a1 + a2) / (x1 + x2) <= max(a1 / x1, a2 / x2) for positive quadruples."""
    a1, a2, x1, x2 = np.exp(rng.uniform(-8.0, 8.0, size=(4, cases)))
    lhs = (a1 + a2) / (x1 + x2)
    rhs = np.maximum(a1 / x1, a2 / x2)
    return CheckReport(
        "ratio_inequality", True, float(np.min((rhs - lhs) / rhs)), {"kind": "exact", "cases": cases}
    )


def check_prior_normalization(poisson_rate: float = 4.0, shape: float = 2.0, rate: float = 1.0) -> CheckReport:
    """Truncation pmf and scale density each integrate to one."""
    pmf_total = math.fsum(math.exp(truncation_log_pmf(r, poisson_rate)) for r in range(64))
    dens_total, _ = integrate.quad(lambda s: math.exp(scale_log_density(s, shape, rate)), 0.0, np.inf)
    err_pmf = abs(pmf_total - 1.0)
    err_dens = abs(dens_total - 1.0)
    return CheckReport(
        "prior_normalization",
        True,
        min(ROUNDING - err_pmf, 1e-8 - err_dens),
        {"kind": "exact", "pmf_total": pmf_total, "density_total": dens_total},
    )


# -- runner ----------------------------------------------------------------------------


def _suite(seed: int, constants: dict | None):
    ss = np.random.SeedSequence(seed)
    streams = iter(ss.spawn(16))

    def rng():
        return np.random.default_rng(next(streams))

    gammas = (0.5, 1.0, 1.48, 1.5)
    jobs = [
        ("normal_ball", lambda: [check_normal_ball(0.0, 1.0), sweep_normal_ball(100)]),
    ]
    g = rng()
    jobs.append(
        (
            "ig_tail",
            lambda g=g: [check_ig_tail(2.0, 1.0, 10.0, 10**6, g), check_ig_tail(3.0, 2.0, 5.0, 10**6, g)],
        )
    )
    g = rng()
    jobs.append(
        ("anderson", lambda g=g: [check_anderson_exact_1d()] + [check_anderson(d, 20000, g) for d in (1, 2, 3)])
    )
    g = rng()
    jobs.append(
        (
            "entropy",
            lambda g=g: [
                check_entropy_bound(0, 1.0, 0.5, 1.0, g),
                check_entropy_bound(2, 2.0, 0.25, 0.5, g),
                check_entropy_bound(3, 1.0, 0.1, 1.0, g),
                check_entropy_bound(1, 1.0, 5.0, 1.0, g),
            ],
        )
    )
    jobs.append(("cov_bounds", lambda: [check_cov_bounds(gm, 1.0, 10, constants) for gm in gammas]))
    jobs.append(("assumption_2b", lambda: [check_assumption_2b(gm, 1.0, 10) for gm in gammas]))
    jobs.append(
        (
            "precision",
            lambda: [
                check_precision_sparsity(1.0, 1.0, 4, witness=1e-4),
                check_precision_sparsity(0.5, 1.0, 6),
                check_precision_sparsity(1.48, 1.0, 6, witness=1e-4),
            ],
        )
    )
    g = rng()
    jobs.append(("factor_identity", lambda g=g: [check_factor_identity(gm, 1.0, g) for gm in gammas]))
    g = rng()
    jobs.append(("approximation", lambda g=g: [check_approximation(g)]))
    g = rng()
    jobs.append(("coefficients", lambda g=g: [check_coefficient_bound(g)]))
    g = rng()
    jobs.append(("modulus", lambda g=g: [check_modulus_bounds(g)]))
    g = rng()
    jobs.append(("ratio", lambda g=g: [check_ratio_inequality(g)]))
    jobs.append(("prior", lambda: [check_prior_normalization()]))
    return jobs


def _guarded(name, fn) -> list[CheckReport]:
    try:
        return fn()
    except Exception as exc:  # a crashing check is a failing check
        return [CheckReport(name, False, -math.inf, {"error": f"{type(exc).__name__}: {exc}"})]


def run_all(seed: int = 0, constants: dict | None = None, workers: int = 1) -> list[CheckReport]:
    """Run every check with generators derived from ``seed``.

    Each check group owns its own random stream, so results do not depend on
    ``workers``.  Reports come back in a fixed order.
    """
    jobs = _suite(seed, constants)
    if workers <= 1:
        groups = [_guarded(n, f) for n, f in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            groups = list(pool.map(lambda job: _guarded(*job), jobs))
    return [rep for grp in groups for rep in grp]


def all_passed(reports: list[CheckReport]) -> bool:
    return all(r.passed for r in reports)
