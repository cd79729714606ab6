"""Compiled inner loops: Euler-Maruyama stepping and Grammian accumulation."""

import numba
import numpy as np


@numba.njit(cache=True)
def _interp(v, x):
    n = v.shape[0]
    u = x - np.floor(x)
    pos = u * n
    m = int(pos)
    if m >= n:
        m = n - 1
    f = pos - m
    nxt = m + 1
    if nxt == n:
        nxt = 0
    return v[m] + f * (v[nxt] - v[m])


@numba.njit(cache=True)
def euler_maruyama_nodes(x0, nodes, dt, normals, out):
    """out[0] = x0, out[m+1] = out[m] + b(out[m]) dt + sqrt(dt) normals[m]."""
    sq = np.sqrt(dt)
    x = x0
    out[0] = x
    for m in range(normals.shape[0]):
        b = _interp(nodes, x)
        x = x + b * dt + sq * normals[m]
        out[m + 1] = x
    return x


@numba.njit(cache=True)
def accumulate_stats(x, incr, r, mu, g):
    """Add sum_m psi(x_m) incr_m to mu and sum_m psi psi' to g.

    ``g`` has shape (2**(r+1), r+2): row ``i`` holds the products of psi_i
    with the active basis function at each coarser-or-equal level, in the
    order (psi_1, psi_{0,1}, level 1, ..., level(i)).
    """
    nl = r + 2
    act = np.empty(nl, dtype=np.int64)
    val = np.empty(nl)
    for m in range(x.shape[0]):
        u = x[m] - np.floor(x[m])
        t = abs(1.0 - 2.0 * u)
        act[0] = 0
        val[0] = t
        act[1] = 1
        val[1] = 1.0 - t
        scale = 1.0
        for j in range(1, r + 1):
            scale *= 2.0
            pos = u * scale
            kk = int(pos)
            if kk >= int(scale):
                kk = int(scale) - 1
            f = pos - kk
            act[j + 1] = int(scale) + kk
            if f < 0.5:
                val[j + 1] = 2.0 * f
            else:
                val[j + 1] = 2.0 * (1.0 - f)
        dx = incr[m]
        for a in range(nl):
            ia = act[a]
            va = val[a]
            mu[ia] += va * dx
            for b in range(a + 1):
                g[ia, b] += va * val[b]
