"""Bayesian drift estimation for periodic diffusions with a Faber-Schauder series prior."""

from .experiments import (
    MCMCConfig,
    RateStudyConfig,
    RateTable,
    TruthSpec,
    contraction_study,
    make_truth,
    regression_fit,
    regression_simulate,
    regression_study,
    target_slope,
)
from .fsbasis import (
    Expansion,
    besov_seminorm,
    eval_basis,
    eval_expansion,
    expand_dyadic,
    level,
    norm,
    truncate,
)
from .inference import (
    ChainState,
    PosteriorGaussian,
    SufficientStats,
    conditional_posterior,
    credible_band,
    log_marginal,
    mcmc_run,
    posterior_mean_drift,
    sufficient_stats,
)
from .prior import OU, Independent, PriorSpec, covariance_matrix, cov_entry_ou, ou_kernel
from .sdesim import ObservedPath, loglik, occupation_density, read_path, simulate_path, write_path
from .verify import CheckReport, run_all

__version__ = "0.1.0"

__all__ = [
    "ChainState",
    "CheckReport",
    "Expansion",
    "Independent",
    "MCMCConfig",
    "OU",
    "ObservedPath",
    "PosteriorGaussian",
    "PriorSpec",
    "RateStudyConfig",
    "RateTable",
    "SufficientStats",
    "TruthSpec",
    "besov_seminorm",
    "conditional_posterior",
    "contraction_study",
    "cov_entry_ou",
    "covariance_matrix",
    "credible_band",
    "eval_basis",
    "eval_expansion",
    "expand_dyadic",
    "level",
    "log_marginal",
    "loglik",
    "make_truth",
    "mcmc_run",
    "norm",
    "occupation_density",
    "ou_kernel",
    "posterior_mean_drift",
    "read_path",
    "regression_fit",
    "regression_simulate",
    "regression_study",
    "run_all",
    "simulate_path",
    "sufficient_stats",
    "target_slope",
    "truncate",
    "write_path",
]
