"""Simulation of dX = b(X) dt + dW with 1-periodic drift, and path functionals."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import _kernels
from .fsbasis import Expansion

CHUNK = 1 << 20

DUMP_MAGIC = b"CDRF"
DUMP_VERSION = 1
_HEADER = struct.Struct("<4sIddQQ")


@dataclass(frozen=True)
class ObservedPath:
    """Discretely observed trajectory X_{m dt}, m = 0..M."""

    dt: float
    values: np.ndarray = field(repr=False)
    x0: float
    T: float
    seed: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        steps = n_steps(self.T, self.dt)
        if v.size != steps + 1:
            raise ValueError(f"expected {steps + 1} values for T={self.T}, dt={self.dt}")
        if v[0] != self.x0:
            raise ValueError("values[0] must equal x0")
        object.__setattr__(self, "values", v)

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values)


@dataclass(frozen=True)
class OccupationDensity:
    nbins: int
    density: np.ndarray

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nbins + 1)


def n_steps(T: float, dt: float) -> int:
    """Number of steps T/dt; raises unless it is an integer."""
    if not (T > 0 and dt > 0):
        raise ValueError("T and dt must be positive")
    m = round(T / dt)
    if m < 1 or abs(m * dt - T) > 1e-9 * T:
        raise ValueError(f"T={T} is not an integer multiple of dt={dt}")
    return int(m)


def _normal_chunks(rng: np.random.Generator, total: int):
    done = 0
    while done < total:
        k = min(CHUNK, total - done)
        yield rng.standard_normal(k)
        done += k


def simulate_path(
    drift: Expansion | Callable[[float], float],
    x0: float,
    T: float,
    dt: float,
    rng: np.random.Generator,
    seed: int = 0,
) -> ObservedPath:
    """Euler-Maruyama path of dX = drift(X) dt + dW on a uniform grid.

    Expansions are stepped by a compiled loop; any other callable is called
    once per step with a float.
    """
    steps = n_steps(T, dt)
    out = np.empty(steps + 1)
    out[0] = x0
    pos = 0
    if isinstance(drift, Expansion):
        nodes = drift.node_values()
        x = float(x0)
        for z in _normal_chunks(rng, steps):
            seg = np.empty(z.size + 1)
            x = _kernels.euler_maruyama_nodes(x, nodes, dt, z, seg)
            out[pos + 1 : pos + 1 + z.size] = seg[1:]
            pos += z.size
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("path became non-finite")
    else:
        sq = math.sqrt(dt)
        x = float(x0)
        for z in _normal_chunks(rng, steps):
            for w in z:
                b = float(drift(x))
                if not math.isfinite(b):
                    raise FloatingPointError(f"drift returned {b} at x={x}")
                x = x + b * dt + sq * w
                pos += 1
                out[pos] = x
    return ObservedPath(dt=dt, values=out, x0=float(x0), T=float(T), seed=int(seed))


def iter_path_chunks(drift: Expansion, x0: float, T: float, dt: float, rng: np.random.Generator):
    """Yield (left points, increments) chunks of the same path simulate_path would produce."""
    steps = n_steps(T, dt)
    nodes = drift.node_values()
    x = float(x0)
    for z in _normal_chunks(rng, steps):
        seg = np.empty(z.size + 1)
        x = _kernels.euler_maruyama_nodes(x, nodes, dt, z, seg)
        if not math.isfinite(x):
            raise FloatingPointError("path became non-finite")
        yield seg[:-1], np.diff(seg)


def loglik(b: Expansion, path: ObservedPath, s: float = 1.0) -> float:
    """Discretized Girsanov log-likelihood of drift s*b (left-point Ito sum)."""
    vals = b(path.values[:-1])
    dx = path.increments
    return float(s * np.dot(vals, dx) - 0.5 * s * s * np.dot(vals, vals) * path.dt)


def loglik_terms(b: Expansion, path: ObservedPath) -> tuple[float, float]:
    """(Ito term, quadratic term) of the unit-scale log-likelihood."""
    vals = b(path.values[:-1])
    return float(np.dot(vals, path.increments)), float(0.5 * np.dot(vals, vals) * path.dt)


def occupation_density(path: ObservedPath, nbins: int) -> OccupationDensity:
    """Time-weighted histogram of X_t mod 1, normalized to a probability density."""
    if nbins < 2:
        raise ValueError("need at least two bins")
    u = np.mod(path.values[:-1], 1.0)
    idx = np.minimum((u * nbins).astype(np.int64), nbins - 1)
    counts = np.bincount(idx, minlength=nbins).astype(float)
    density = counts * nbins / counts.sum()
    return OccupationDensity(nbins, density)


# -- binary dump ----------------------------------------------------------------


def write_path(path: ObservedPath, dest: str | Path) -> None:
    header = _HEADER.pack(
        DUMP_MAGIC, DUMP_VERSION, path.dt, path.x0, path.values.size, path.seed & (2**64 - 1)
    )
    with open(dest, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(path.values, dtype="<f8").tobytes())


def read_path(src: str | Path) -> ObservedPath:
    data = Path(src).read_bytes()
    magic, version, dt, x0, count, seed = _HEADER.unpack_from(data, 0)
    if magic != DUMP_MAGIC:
        raise ValueError("not a path dump (bad magic)")
    if version != DUMP_VERSION:
        raise ValueError(f"unsupported dump version {version}")
    values = np.frombuffer(data, dtype="<f8", count=count, offset=_HEADER.size).astype(float)
    return ObservedPath(dt=dt, values=values, x0=x0, T=(count - 1) * dt, seed=seed)
