"""A tour of the Faber-Schauder basis.

Expands a smooth periodic function on a dyadic grid, shows how fast the
coefficients decay by level, and compares truncation errors with the
approximation bound.
"""

import math

import numpy as np

from schauderdrift.fsbasis import (
    approximation_bound,
    besov_seminorm,
    expand_dyadic,
    levels,
    norm,
    truncate,
)

r = 10
x = np.arange(2 ** (r + 1)) / 2 ** (r + 1)
f = np.sin(2 * math.pi * x) + 0.3 * np.abs(np.sin(3 * math.pi * x))
e = expand_dyadic(f, r)

print("largest |coefficient| per level:")
lev = levels(r)
for j in range(r + 1):
    print(f"  level {j:2d}: {np.max(np.abs(e.coeffs[lev == j])):.3e}")

semi = besov_seminorm(e, 1.0).seminorm
print(f"\n1-seminorm of the expansion: {semi:.4f}")
print("truncation error vs bound (sup norm):")
for k in (2, 4, 6, 8):
    err = norm(e - truncate(e, k).pad(r), math.inf)
    print(f"  cap {k}: error {err:.3e}   bound {approximation_bound(semi, 1.0, k):.3e}")

print(f"\nL2 norm {norm(e, 2):.6f}, L4 norm {norm(e, 4):.6f}, sup norm {norm(e, math.inf):.6f}")
