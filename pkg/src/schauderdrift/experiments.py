"""Contraction-rate studies for the diffusion and fixed-design regression models.

A study fits the posterior-mean drift at several horizons (or sample sizes),
measures its L^p distance to the truth and fits the log-log slope of the
replicate-averaged error against log T.  Log factors in the rates are ignored.

Replicate seeds are derived from the master seed with splitmix64::

    job_seed = splitmix64(splitmix64(master) ^ (T_index << 32 | replicate))

so every (T, replicate) job is reproducible on its own, and results are
merged in (T, replicate) order whatever the number of workers.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fsbasis import Expansion, levels, norm
from .inference import (
    acceptance_rates,
    mcmc_run,
    posterior_mean_drift,
    regression_stats,
    simulate_stats,
)
from .prior import PriorSpec
from .sdesim import ObservedPath, simulate_path

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(master: int, t_index: int, replicate: int) -> int:
    return splitmix64(splitmix64(master & MASK64) ^ ((t_index << 32) | replicate))


def target_slope(beta: float, p: float = 2.0) -> float:
    """Exponent of T in the contraction rate for the L^p norm (log factors dropped)."""
    if isinstance(p, str):
        p = float(p)
    if not beta > 0:
        raise ValueError("beta must be positive")
    if p < 2:
        raise ValueError("p must be >= 2")
    if p == 2:
        return -beta / (1.0 + 2.0 * beta)
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    return -(beta - 0.5 + inv_p) / (1.0 + 2.0 * beta)


def make_truth(beta: float, seminorm: float, cap: int, seed: int) -> Expansion:
    """Drift with z_i = seminorm * 2**(-beta level(i)) * (random sign)."""
    rng = np.random.default_rng(seed)
    signs = rng.choice([-1.0, 1.0], size=2 ** (cap + 1))
    return Expansion(cap, seminorm * 2.0 ** (-beta * levels(cap)) * signs)


@dataclass(frozen=True)
class TruthSpec:
    beta: float = 1.0
    seminorm: float = 1.0
    cap: int = 10
    seed: int = 2024

    def build(self) -> Expansion:
        return make_truth(self.beta, self.seminorm, self.cap, self.seed)


@dataclass(frozen=True)
class MCMCConfig:
    iters: int = 1500
    burn_in: int = 500
    step_s: float = 0.3
    r_max: int = 8

    def __post_init__(self):
        if self.iters < 1:
            raise ValueError("iters must be >= 1")
        if not 0 <= self.burn_in < self.iters:
            raise ValueError("burn_in must lie in [0, iters)")
        if not self.step_s > 0:
            raise ValueError("step_s must be positive")
        if self.r_max < 0:
            raise ValueError("r_max must be nonnegative")


@dataclass(frozen=True)
class RateStudyConfig:
    truth: TruthSpec = field(default_factory=TruthSpec)
    horizons: tuple[float, ...] = (250.0, 1000.0, 4000.0, 16000.0)
    replicates: int = 20
    dt: float = 1e-3
    x0: float = 0.0
    prior: PriorSpec = field(default_factory=PriorSpec)
    mcmc: MCMCConfig = field(default_factory=MCMCConfig)
    norms: tuple[float, ...] = (2.0, math.inf)
    seed: int = 0
    noise_sd: float = 1.0  # regression studies only

    def __post_init__(self):
        h = tuple(float(t) for t in self.horizons)
        if not h:
            raise ValueError("horizons must be nonempty")
        if any(b <= a for a, b in zip(h, h[1:])):
            raise ValueError("horizons must be strictly increasing")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        object.__setattr__(self, "horizons", h)
        object.__setattr__(self, "norms", tuple(float(p) for p in self.norms))


@dataclass
class RateTable:
    rows: list[tuple[float, int, float, float]]
    fitted_slope: dict[float, float]
    target_slope: dict[float, float]
    failures: list[tuple[float, int, str]] = field(default_factory=list)
    diagnostics: list[dict] = field(default_factory=list)

    def mean_errors(self, p: float) -> tuple[np.ndarray, np.ndarray]:
        ts = sorted({row[0] for row in self.rows})
        means = [np.mean([e for (t, _, q, e) in self.rows if t == T and q == p]) for T in ts]
        return np.array(ts), np.array(means)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["T", "replicate", "p", "error"])
        for T, rep, p, err in self.rows:
            w.writerow([_fmt_num(T), rep, _fmt_p(p), repr(float(err))])
        return buf.getvalue()

    def summary(self) -> dict:
        out = {"fitted_slope": {}, "target_slope": {}, "mean_error": {}, "failures": []}
        for p in self.fitted_slope:
            key = _fmt_p(p)
            out["fitted_slope"][key] = self.fitted_slope[p]
            out["target_slope"][key] = round(self.target_slope[p], 4)
            ts, means = self.mean_errors(p)
            out["mean_error"][key] = {_fmt_num(t): float(m) for t, m in zip(ts, means)}
        out["failures"] = [{"T": t, "replicate": r, "error": msg} for t, r, msg in self.failures]
        return out

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def _fmt_p(p: float) -> str:
    return "inf" if math.isinf(p) else _fmt_num(p)


def _fmt_num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def fit_slope(ts, errors) -> float:
    """Least-squares slope of log(error) against log(T)."""
    slope, _ = np.polyfit(np.log(np.asarray(ts, float)), np.log(np.asarray(errors, float)), 1)
    return float(slope)


# -- jobs ----------------------------------------------------------------------------


def _posterior_errors(stats, truth, cfg: RateStudyConfig, rng):
    m = cfg.mcmc
    chain = mcmc_run(stats, cfg.prior, m.iters, m.r_max, m.step_s, rng)
    grid_cap = max(truth.r, m.r_max)
    est = posterior_mean_drift(chain, m.burn_in, grid_cap)
    diff = est - truth
    errors = {p: norm(diff, p) for p in cfg.norms}
    kept = chain[m.burn_in :]
    diag = {
        "accept": acceptance_rates(chain),
        "mean_r": float(np.mean([c.r for c in kept])),
        "mean_s": float(np.mean([c.s for c in kept])),
    }
    return errors, diag


def _diffusion_job(args):
    cfg, t_index, rep = args
    T = cfg.horizons[t_index]
    seed = derive_seed(cfg.seed, t_index, rep)
    rng = np.random.default_rng(seed)
    truth = cfg.truth.build()
    try:
        stats = simulate_stats(truth, cfg.x0, T, cfg.dt, rng, cfg.mcmc.r_max)
        errors, diag = _posterior_errors(stats, truth, cfg, rng)
    except Exception as exc:  # recorded, not fatal to the study
        return T, rep, None, f"{type(exc).__name__}: {exc}"
    return T, rep, (errors, diag), None


def regression_simulate(b0: Expansion, n: int, noise_sd: float, rng: np.random.Generator):
    """Design points i/n, i = 0..n, and responses b0(i/n) + noise_sd * N(0, 1)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x = np.arange(n + 1) / n
    y = b0(x) + noise_sd * rng.standard_normal(n + 1)
    return x, y


@dataclass
class RegressionFit:
    chain: list
    mean: Expansion
    accept: dict


def regression_fit(data, spec: PriorSpec, mcmc: MCMCConfig, noise_sd: float, rng) -> RegressionFit:
    """Posterior for the regression function with the (r, s) sampler."""
    x, y = data
    if len(x) == 0:
        raise ValueError("regression data must be nonempty")
    stats = regression_stats(x, y, noise_sd, mcmc.r_max)
    chain = mcmc_run(stats, spec, mcmc.iters, mcmc.r_max, mcmc.step_s, rng)
    mean = posterior_mean_drift(chain, mcmc.burn_in, mcmc.r_max)
    return RegressionFit(chain, mean, acceptance_rates(chain))


def _regression_job(args):
    cfg, t_index, rep = args
    n = int(cfg.horizons[t_index])
    seed = derive_seed(cfg.seed, t_index, rep)
    rng = np.random.default_rng(seed)
    truth = cfg.truth.build()
    try:
        x, y = regression_simulate(truth, n, cfg.noise_sd, rng)
        stats = regression_stats(x, y, cfg.noise_sd, cfg.mcmc.r_max)
        errors, diag = _posterior_errors(stats, truth, cfg, rng)
    except Exception as exc:
        return float(n), rep, None, f"{type(exc).__name__}: {exc}"
    return float(n), rep, (errors, diag), None


def _run_jobs(job, cfg: RateStudyConfig, workers: int) -> RateTable:
    keys = [(cfg, ti, rep) for ti in range(len(cfg.horizons)) for rep in range(cfg.replicates)]
    if workers <= 1:
        results = [job(k) for k in keys]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, keys, chunksize=1))
    results.sort(key=lambda res: (res[0], res[1]))
    rows, failures, diags = [], [], []
    for T, rep, payload, err in results:
        if payload is None:
            failures.append((T, rep, err))
            continue
        errors, diag = payload
        diags.append({"T": T, "replicate": rep, **diag})
        for p in cfg.norms:
            rows.append((T, rep, p, errors[p]))
    table = RateTable(rows, {}, {}, failures, diags)
    for p in cfg.norms:
        ts, means = table.mean_errors(p)
        table.fitted_slope[p] = fit_slope(ts, means) if len(ts) >= 2 else float("nan")
        table.target_slope[p] = target_slope(cfg.truth.beta, max(p, 2.0))
    return table


def contraction_study(cfg: RateStudyConfig, workers: int = 1) -> RateTable:
    """Posterior-mean L^p errors of the diffusion drift over horizons and replicates."""
    return _run_jobs(_diffusion_job, cfg, workers)


def regression_study(cfg: RateStudyConfig, workers: int = 1) -> RateTable:
    """Same study for the regression model; ``horizons`` are the sample sizes n."""
    return _run_jobs(_regression_job, cfg, workers)


# -- standard fixtures ----------------------------------------------------------------

STANDARD_TRUTH = TruthSpec(beta=1.0, seminorm=1.0, cap=8, seed=2024)


def standard_test_path(T: float = 1000.0, dt: float = 1e-3, seed: int = 7) -> ObservedPath:
    """Reference path used by tuning and regression tests."""
    rng = np.random.default_rng(seed)
    return simulate_path(STANDARD_TRUTH.build(), 0.0, T, dt, rng, seed=seed)
