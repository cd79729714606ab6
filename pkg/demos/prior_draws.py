"""Draws from the series prior and the covariance of the OU model.

Samples (R, S, b) from the hierarchy for both covariance models and prints
the implied pointwise variance of the periodic Ornstein-Uhlenbeck series
with sigma2 chosen for unit variance.
"""

import numpy as np

from schauderdrift.fsbasis import design_matrix
from schauderdrift.prior import OU, Independent, PriorSpec, covariance_matrix, sample_hierarchy, unit_variance_sigma2

rng = np.random.default_rng(1)
gamma = 1.48
models = {
    "independent, alpha = 1/2": Independent(0.5),
    f"OU, gamma = {gamma}": OU(gamma, unit_variance_sigma2(gamma)),
}
x = np.linspace(0, 1, 9)
for label, model in models.items():
    spec = PriorSpec(model)
    print(label)
    for _ in range(3):
        r, s, b = sample_hierarchy(spec, rng, r_cap=10)
        print(f"  R = {r}, S = {s:.3f}, b on a coarse grid: {np.round(b(x), 2)}")

# Cov(b(s), b(t)) at unit scale on dyadic nodes of level 5
spec = PriorSpec(models[f"OU, gamma = {gamma}"])
A = covariance_matrix(5, spec).entries
nodes = np.arange(64) / 64
psi = design_matrix(5, nodes)
cov = psi @ A @ psi.T
print("\nOU series covariance, first row (distance 0 .. 1/2):")
print(np.round(cov[0, :33:4], 4))
print(f"diagonal range: {cov.diagonal().min():.12f} .. {cov.diagonal().max():.12f}")
