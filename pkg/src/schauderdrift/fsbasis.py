"""Periodic Faber-Schauder basis on [0, 1).

Basis elements are addressed by a flat index ``i >= 1``.  Index 1 is the
wrapped hat ``psi_1(x) = |1 - 2x|`` (peak at 0), index 2 is the level-0 hat
``psi_{0,1}`` and for ``j >= 1`` the hat ``psi_{j,k}`` has flat index
``2**j + k``.  A truncated expansion at level cap ``r`` therefore has exactly
``2**(r+1)`` coefficients, stored 0-based so that ``coeffs[i - 1] = z_i``.

Every expansion at cap ``r`` is the continuous periodic piecewise-linear
interpolant of its values on the grid ``m * 2**-(r+1)``; most operations go
through those node values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


def level(i: int) -> int:
    """Resolution level of flat index ``i`` (0 for i in {1, 2})."""
    i = int(i)
    if i < 1:
        raise ValueError(f"basis index must be >= 1, got {i}")
    if i <= 2:
        return 0
    return (i - 1).bit_length() - 1


def index_to_jk(i: int) -> tuple[int, int]:
    """Map flat index to (level, position); index 1 maps to (0, 0)."""
    i = int(i)
    if i < 1:
        raise ValueError(f"basis index must be >= 1, got {i}")
    if i == 1:
        return 0, 0
    j = (i - 1).bit_length() - 1
    return j, i - 2**j


def jk_to_index(j: int, k: int) -> int:
    if j < 0 or not 1 <= k <= 2**j:
        raise ValueError(f"invalid (j, k) = ({j}, {k})")
    return 2**j + k


def levels(r: int) -> np.ndarray:
    """Levels of all indices in I_r, in flat (0-based) order."""
    out = np.zeros(2 ** (r + 1), dtype=np.int64)
    for j in range(1, r + 1):
        out[2**j : 2 ** (j + 1)] = j
    return out


def support(i: int) -> tuple[float, float]:
    """Support interval of psi_i modulo 1 (the whole circle for i <= 2)."""
    j, k = index_to_jk(i)
    if i <= 2:
        return 0.0, 1.0
    return (k - 1) * 2.0**-j, k * 2.0**-j


def disjoint_interiors(i: int, ip: int) -> bool:
    """True when psi_i and psi_ip have supports with disjoint interiors."""
    if i <= 2 or ip <= 2:
        return False
    a, b = support(i)
    c, d = support(ip)
    # dyadic intervals are either nested or have disjoint interiors
    return b <= c or d <= a


def hat(x):
    """The hat function: 2x on [0, 1/2), 2(1 - x) on [1/2, 1], 0 elsewhere."""
    x = np.asarray(x, dtype=float)
    out = np.where(x < 0.5, 2.0 * x, 2.0 * (1.0 - x))
    out = np.where((x < 0.0) | (x > 1.0), 0.0, out)
    return out[()] if out.ndim == 0 else out


def eval_basis(i: int, x):
    """Evaluate psi_i at ``x`` (periodic with period 1)."""
    u = np.mod(np.asarray(x, dtype=float), 1.0)
    if i == 1:
        out = np.abs(1.0 - 2.0 * u)
        return out[()] if out.ndim == 0 else out
    j, k = index_to_jk(i)
    return hat(2.0**j * u - k + 1)


@dataclass(frozen=True)
class Expansion:
    """Truncated Faber-Schauder expansion with level cap ``r``."""

    r: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        if self.r < 0:
            raise ValueError("level cap must be nonnegative")
        if c.size != 2 ** (self.r + 1):
            raise ValueError(
                f"expansion at cap {self.r} needs {2 ** (self.r + 1)} coefficients, got {c.size}"
            )
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, r: int) -> "Expansion":
        return cls(r, np.zeros(2 ** (r + 1)))

    @property
    def size(self) -> int:
        return self.coeffs.size

    def node_values(self) -> np.ndarray:
        """Values on the grid m * 2**-(r+1), m = 0 .. 2**(r+1) - 1."""
        return synthesize(self.coeffs)

    def __call__(self, x):
        return eval_expansion(self, x)

    def pad(self, r: int) -> "Expansion":
        """Same function represented at a larger cap (zero detail coefficients)."""
        if r < self.r:
            raise ValueError(f"cannot pad cap {self.r} down to {r}")
        c = np.zeros(2 ** (r + 1))
        c[: self.size] = self.coeffs
        return Expansion(r, c)

    def __add__(self, other: "Expansion") -> "Expansion":
        r = max(self.r, other.r)
        return Expansion(r, self.pad(r).coeffs + other.pad(r).coeffs)

    def __sub__(self, other: "Expansion") -> "Expansion":
        r = max(self.r, other.r)
        return Expansion(r, self.pad(r).coeffs - other.pad(r).coeffs)

    def __mul__(self, c: float) -> "Expansion":
        return Expansion(self.r, self.coeffs * float(c))

    __rmul__ = __mul__

    def to_dict(self) -> dict:
        return {"r": int(self.r), "coeffs": [float(v) for v in self.coeffs]}

    @classmethod
    def from_dict(cls, d: dict) -> "Expansion":
        return cls(int(d["r"]), np.asarray(d["coeffs"], dtype=float))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "Expansion":
        return cls.from_dict(json.loads(s))


def _cap_from_size(n: int) -> int:
    if n < 2 or n & (n - 1):
        raise ValueError(f"length must be 2**(r+1) for some r >= 0, got {n}")
    return n.bit_length() - 2


def synthesize(coeffs) -> np.ndarray:
    """Node values of an expansion from its coefficients (inverse midpoint displacement)."""
    c = np.asarray(coeffs, dtype=float)
    r = _cap_from_size(c.size)
    v = c[:2].copy()
    for j in range(1, r + 1):
        fine = np.empty(2 ** (j + 1))
        fine[0::2] = v
        fine[1::2] = 0.5 * (v + np.roll(v, -1)) + c[2**j : 2 ** (j + 1)]
        v = fine
    return v


def expand_dyadic(values, r: int | None = None) -> Expansion:
    """Coefficients of the interpolant of periodic dyadic samples.

    ``values[m]`` is the function value at ``m * 2**-(r+1)``; the value at 1
    is implied by periodicity.  Detail coefficients are peak value minus the
    average of the two endpoint values.
    """
    v = np.asarray(values, dtype=float).reshape(-1)
    cap = _cap_from_size(v.size)
    if r is not None and r != cap:
        raise ValueError(f"{v.size} samples correspond to cap {cap}, not {r}")
    c = np.empty(v.size)
    for j in range(cap, 0, -1):
        coarse = v[0::2]
        c[2**j : 2 ** (j + 1)] = v[1::2] - 0.5 * (coarse + np.roll(coarse, -1))
        v = coarse
    c[:2] = v
    return Expansion(cap, c)


def interp_nodes(v: np.ndarray, x):
    """Periodic linear interpolation of node values ``v`` on a uniform grid."""
    n = v.size
    u = np.mod(np.asarray(x, dtype=float), 1.0) * n
    m = np.floor(u).astype(np.int64)
    m = np.minimum(m, n - 1)
    f = u - m
    out = v[m] + f * (v[(m + 1) % n] - v[m])
    return out[()] if out.ndim == 0 else out


def eval_expansion(e: Expansion, x):
    """Evaluate the expansion at ``x`` (scalar or array)."""
    return interp_nodes(e.node_values(), x)


@dataclass(frozen=True)
class SmoothnessReport:
    beta: float
    seminorm: float


def besov_seminorm(e: Expansion, beta: float) -> SmoothnessReport:
    """sup_i 2**(beta * level(i)) |z_i| over the stored coefficients."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    w = 2.0 ** (beta * levels(e.r))
    return SmoothnessReport(float(beta), float(np.max(w * np.abs(e.coeffs))))


def truncate(e: Expansion, r: int) -> Expansion:
    """Drop all coefficients above level ``r``."""
    if r > e.r:
        raise ValueError(f"cannot truncate cap {e.r} expansion to {r}")
    if r < 0:
        raise ValueError("level cap must be nonnegative")
    return Expansion(r, e.coeffs[: 2 ** (r + 1)])


def _segment_power_integrals(a: np.ndarray, b: np.ndarray, p: float) -> np.ndarray:
    """Mean of |linear|**p over unit segments from a to b (exact)."""
    aa, bb = np.abs(a), np.abs(b)
    out = np.empty_like(aa)
    cross = a * b < 0
    if np.any(cross):
        ac, bc = aa[cross], bb[cross]
        out[cross] = (ac ** (p + 1) + bc ** (p + 1)) / ((p + 1) * (ac + bc))
    same = ~cross
    lo = np.minimum(aa[same], bb[same])
    hi = np.maximum(aa[same], bb[same])
    if float(p).is_integer():
        # (hi^{p+1} - lo^{p+1}) / (hi - lo) expanded as a sum of monomials
        pi = int(p)
        acc = np.zeros_like(lo)
        for k in range(pi + 1):
            acc += lo**k * hi ** (pi - k)
        out[same] = acc / (p + 1)
    else:
        d = hi - lo
        near = d <= 1e-6 * np.maximum(hi, 1e-300)
        res = np.empty_like(lo)
        res[near] = (0.5 * (lo[near] + hi[near])) ** p
        far = ~near
        res[far] = (hi[far] ** (p + 1) - lo[far] ** (p + 1)) / ((p + 1) * d[far])
        out[same] = res
    return out


def norm(e: Expansion, p: float = 2.0) -> float:
    """Exact L^p([0,1]) norm of the expansion; ``p`` may be ``inf``."""
    if isinstance(p, str):
        p = float(p)
    if not (p >= 1):
        raise ValueError(f"p must be >= 1, got {p}")
    v = e.node_values()
    if math.isinf(p):
        return float(np.max(np.abs(v)))
    w = np.roll(v, -1)
    h = 1.0 / v.size
    if p == 2:
        return float(math.sqrt(h * np.sum(v * v + v * w + w * w) / 3.0))
    return float((h * np.sum(_segment_power_integrals(v, w, p))) ** (1.0 / p))


def approximation_bound(seminorm: float, beta: float, r: int) -> float:
    """Sup-norm bound on the truncation error at cap r for finite beta-seminorm."""
    return seminorm * 2.0 ** (-r * beta) / (2.0**beta - 1.0)


def sup_over_l2_bound(r: int) -> float:
    return math.sqrt(3.0) * 2.0 ** ((r + 1) / 2)


def lp_over_l2_bound(r: int, p: float) -> float:
    if math.isinf(p):
        return sup_over_l2_bound(r)
    return math.sqrt(3.0) * (p + 1) ** (-1.0 / p) * 2.0 ** ((r + 1) * (0.5 - 1.0 / p))


def design_matrix(r: int, x) -> np.ndarray:
    """Matrix of psi_i(x_m) for all i in I_r (rows: points)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = 2 ** (r + 1)
    out = np.empty((x.size, n))
    for i in range(1, n + 1):
        out[:, i - 1] = eval_basis(i, x)
    return out
