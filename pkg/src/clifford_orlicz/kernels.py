"""Dense pair-sum kernels behind the integral transforms and the boundary
double integral. Each kernel has a numba version and a chunked numpy
version computing the same sums; :mod:`._accel` picks one.
"""
import math

import numpy as np

from . import _accel
from ._accel import njit

# numpy path: cap on target x source pairs materialised per chunk
_CHUNK_PAIRS = 1 << 21

PSI_CODES = {"power": 0, "power_over_p": 1, "exp_minus_one": 2}


# ---------------------------------------------------------------------------
# vector kernel sum


@njit
def _vector_kernel_sum_nb(targets, sources, values, weights, scale, excl2):
    P, n = targets.shape
    S, W = values.shape
    out = np.zeros((P, n, W))
    z = np.empty(n)
    acc = np.empty((n, W))
    for p in range(P):
        acc[:, :] = 0.0
        for s in range(S):
            r2 = 0.0
            for k in range(n):
                z[k] = targets[p, k] - sources[s, k]
                r2 += z[k] * z[k]
            if r2 <= excl2:
                continue
            if n == 2:
                rn = r2
            elif n == 3:
                rn = r2 * math.sqrt(r2)
            else:
                rn = r2 ** (0.5 * n)
            c = scale * weights[s] / rn
            for k in range(n):
                ck = c * z[k]
                for q in range(W):
                    acc[k, q] += ck * values[s, q]
        out[p] = acc
    return out


def _vector_kernel_sum_np(targets, sources, values, weights, scale, excl2):
    P, n = targets.shape
    W = values.shape[1]
    out = np.zeros((P, n, W))
    step = max(1, _CHUNK_PAIRS // max(1, sources.shape[0]))
    for a in range(0, P, step):
        z = targets[a : a + step, None, :] - sources[None, :, :]
        r2 = np.einsum("psk,psk->ps", z, z)
        with np.errstate(divide="ignore"):
            c = np.where(r2 > excl2, scale * weights / r2 ** (0.5 * n), 0.0)
        for k in range(n):
            out[a : a + step, k, :] = (c * z[..., k]) @ values
    return out


def vector_kernel_sum(targets, sources, values, weights, scale, exclude_radius=0.0):
    """``out[p, k] = scale * sum_s w_s z_k / |z|^n * values[s]`` with ``z = t_p - s_s``.

    Pairs with ``|z| <= exclude_radius`` are skipped. ``values`` may carry
    any number of columns (several fields can be stacked side by side).
    """
    args = (
        np.ascontiguousarray(targets, dtype=float),
        np.ascontiguousarray(sources, dtype=float),
        np.ascontiguousarray(values, dtype=float),
        np.ascontiguousarray(weights, dtype=float),
        float(scale),
        float(exclude_radius) ** 2,
    )
    if _accel.backend() == "numba":
        return _vector_kernel_sum_nb(*args)
    return _vector_kernel_sum_np(*args)


# ---------------------------------------------------------------------------
# boundary double integral


@njit
def _psi_nb(kind, p, t):
    if kind == 0:
        return t**p
    if kind == 1:
        return t**p / p
    return math.expm1(t)


@njit
def _difference_quotient_sum_nb(x, g, w, lam, kind, p, expo):
    # the summand is symmetric in (i, j): visit each unordered pair once
    M, n = x.shape
    W = g.shape[1]
    total = 0.0
    for i in range(M):
        row = 0.0
        for j in range(i + 1, M):
            r2 = 0.0
            for k in range(n):
                d = x[i, k] - x[j, k]
                r2 += d * d
            if r2 == 0.0:
                return -1.0
            d2 = 0.0
            for q in range(W):
                d = g[i, q] - g[j, q]
                d2 += d * d
            r = math.sqrt(r2)
            term = w[j] * _psi_nb(kind, p, math.sqrt(d2) / (lam * r))
            if expo != 0.0:
                term *= r**expo
            row += term
        total += w[i] * row
    return 2.0 * total


def _difference_quotient_sum_np(x, g, w, lam, psi, expo):
    M = x.shape[0]
    total = 0.0
    step = max(1, _CHUNK_PAIRS // M)
    for a in range(0, M, step):
        dx = x[a : a + step, None, :] - x[None, :, :]
        r = np.sqrt(np.einsum("ijk,ijk->ij", dx, dx))
        rows = np.arange(a, min(a + step, M))
        off = np.ones_like(r, dtype=bool)
        off[rows - a, rows] = False
        if np.any(r[off] == 0.0):
            return -1.0
        dg = g[a : a + step, None, :] - g[None, :, :]
        dn = np.sqrt(np.einsum("ijk,ijk->ij", dg, dg))
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(off, psi(np.where(off, dn / (lam * r), 0.0)) * np.where(off, r, 1.0) ** expo, 0.0)
        total += float(w[a : a + step] @ (val @ w))
    return total


def difference_quotient_sum(x, g, w, lam, psi):
    """``sum_{i != j} w_i w_j psi(|g_i - g_j| / (lam r_ij)) r_ij^(2-n)``.

    Returns ``-1`` when two distinct points coincide (caller raises).
    """
    x = np.ascontiguousarray(x, dtype=float)
    g = np.ascontiguousarray(g, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    expo = 2.0 - x.shape[1]
    code = PSI_CODES.get(psi.kind)
    if _accel.backend() == "numba" and code is not None:
        return _difference_quotient_sum_nb(x, g, w, float(lam), code, float(psi.p or 0.0), expo)
    return _difference_quotient_sum_np(x, g, w, float(lam), psi, expo)
