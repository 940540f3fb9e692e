"""Numba kernels for basis reduction and enumeration.

Everything here is single threaded and deterministic. Basis rows stay
exact int64 throughout; only Gram-Schmidt data is floating point, and the
callers re-verify reduction conditions in exact integer arithmetic.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# Keeps int64 row dot products exact: 40 * (2^25)^2 < 2^63.
ENTRY_LIMIT = 1 << 25

MLLL_OK = 0
MLLL_ITER_OVERRUN = 1
MLLL_OVERFLOW = 2


@njit(cache=True)
def _gs_row(B, mu, bstar, bsq, k):
    m = B.shape[1]
    for d in range(m):
        bstar[k, d] = B[k, d]
    for j in range(k):
        dot = 0.0
        for d in range(m):
            dot += B[k, d] * bstar[j, d]
        mu[k, j] = dot / bsq[j]
        for d in range(m):
            bstar[k, d] -= mu[k, j] * bstar[j, d]
    s = 0.0
    for d in range(m):
        s += bstar[k, d] * bstar[k, d]
    bsq[k] = s


@njit(cache=True)
def gram_schmidt_f64(B):
    """Float Gram-Schmidt of the rows of B: returns (mu, bsq)."""
    n, m = B.shape
    mu = np.zeros((n, n))
    bstar = np.zeros((n, m))
    bsq = np.zeros(n)
    for k in range(n):
        _gs_row(B, mu, bstar, bsq, k)
    return mu, bsq


@njit(cache=True)
def _reduce_entry(B, mu, k, j):
    """Size-reduce row k against row j. Returns False on overflow risk."""
    r = mu[k, j]
    if abs(r) <= 0.5 + 1e-10:
        return True
    if abs(r) > 9.0e15:
        return False
    mi = np.int64(np.rint(r))
    fmi = np.float64(mi)
    m = B.shape[1]
    for d in range(m):
        B[k, d] -= mi * B[j, d]
        if B[k, d] > ENTRY_LIMIT or B[k, d] < -ENTRY_LIMIT:
            return False
    for t in range(j):
        mu[k, t] -= fmi * mu[j, t]
    mu[k, j] -= fmi
    return True


@njit(cache=True)
def _row_is_zero(B, k):
    for d in range(B.shape[1]):
        if B[k, d] != 0:
            return False
    return True


@njit(cache=True)
def mlll_f64(B, n, delta, max_iters):
    """LLL-reduce the first n rows of B in place, dropping rows that
    collapse to zero (dependent generators reduce to zero through the
    swap dynamics). Returns (rows_kept, status)."""
    K, m = B.shape
    mu = np.zeros((n, n))
    bstar = np.zeros((n, m))
    bsq = np.zeros(n)
    kmax = -1
    k = 1
    iters = 0
    if n <= 1:
        return n, MLLL_OK
    while k < n:
        iters += 1
        if iters > max_iters:
            return n, MLLL_ITER_OVERRUN
        while kmax < k:
            kmax += 1
            _gs_row(B, mu, bstar, bsq, kmax)
        if not _reduce_entry(B, mu, k, k - 1):
            return n, MLLL_OVERFLOW
        if _row_is_zero(B, k):
            for i in range(k, n - 1):
                for d in range(m):
                    B[i, d] = B[i + 1, d]
            n -= 1
            kmax = k - 1
            if k >= n:
                break
            continue
        # current squared row norm, for the dependency proxy
        cur = 0.0
        for d in range(m):
            e = np.float64(B[k, d])
            cur += e * e
        floor = cur if cur > 1.0 else 1.0
        dependent = bsq[k] <= 1e-18 * floor
        if not dependent and bsq[k] >= (delta - mu[k, k - 1] * mu[k, k - 1]) * bsq[k - 1]:
            for j in range(k - 2, -1, -1):
                if not _reduce_entry(B, mu, k, j):
                    return n, MLLL_OVERFLOW
            if _row_is_zero(B, k):
                for i in range(k, n - 1):
                    for d in range(m):
                        B[i, d] = B[i + 1, d]
                n -= 1
                kmax = k - 1
                if k >= n:
                    break
                continue
            k += 1
        else:
            for d in range(m):
                tmp = B[k, d]
                B[k, d] = B[k - 1, d]
                B[k - 1, d] = tmp
            kmax = k - 2
            k = max(k - 1, 1)
    return n, MLLL_OK


@njit(cache=True)
def enum_shortest(mu, bsq, bound, max_nodes):
    """Schnorr-Euchner DFS for the shortest nonzero coefficient vector.

    mu, bsq describe the Gram-Schmidt data of the enumerated basis;
    bound is the initial inclusive squared-norm bound and max_nodes <= 0
    means unlimited. Returns (found, best_sq, coeffs, completed).
    """
    m = bsq.shape[0]
    x = np.zeros(m, np.int64)
    c = np.zeros(m)
    rho = np.zeros(m + 1)
    dx = np.zeros(m, np.int64)
    ddx = np.zeros(m, np.int64)
    xbest = np.zeros(m, np.int64)
    best = bound
    found = False
    nodes = 0
    i = m - 1
    c[i] = 0.0
    x[i] = 0
    dx[i] = 0
    ddx[i] = -1
    while True:
        nodes += 1
        if max_nodes > 0 and nodes > max_nodes:
            return found, best, xbest, False
        diff = x[i] - c[i]
        t = rho[i + 1] + diff * diff * bsq[i]
        if t <= best:
            if i == 0:
                nonzero = False
                for j in range(m):
                    if x[j] != 0:
                        nonzero = True
                        break
                if nonzero:
                    best = t
                    found = True
                    for j in range(m):
                        xbest[j] = x[j]
                ddx[0] = -ddx[0]
                dx[0] = ddx[0] - dx[0]
                x[0] += dx[0]
            else:
                rho[i] = t
                i -= 1
                cc = 0.0
                for j in range(i + 1, m):
                    cc -= x[j] * mu[j, i]
                c[i] = cc
                x[i] = np.int64(np.rint(cc))
                dx[i] = 0
                ddx[i] = -1 if x[i] <= cc else 1
        else:
            i += 1
            if i >= m:
                break
            ddx[i] = -ddx[i]
            dx[i] = ddx[i] - dx[i]
            x[i] += dx[i]
    return found, best, xbest, True


@njit(cache=True)
def enum_collect(mu, bsq, bound, out):
    """Collect every nonzero coefficient vector with squared norm <= bound.

    Writes into the preallocated (cap, m) array and returns the total count
    (which may exceed cap; the caller then retries with a larger buffer).
    """
    m = bsq.shape[0]
    cap = out.shape[0]
    x = np.zeros(m, np.int64)
    c = np.zeros(m)
    rho = np.zeros(m + 1)
    dx = np.zeros(m, np.int64)
    ddx = np.zeros(m, np.int64)
    count = 0
    i = m - 1
    c[i] = 0.0
    x[i] = 0
    dx[i] = 0
    ddx[i] = -1
    while True:
        diff = x[i] - c[i]
        t = rho[i + 1] + diff * diff * bsq[i]
        if t <= bound:
            if i == 0:
                nonzero = False
                for j in range(m):
                    if x[j] != 0:
                        nonzero = True
                        break
                if nonzero:
                    if count < cap:
                        for j in range(m):
                            out[count, j] = x[j]
                    count += 1
                ddx[0] = -ddx[0]
                dx[0] = ddx[0] - dx[0]
                x[0] += dx[0]
            else:
                rho[i] = t
                i -= 1
                cc = 0.0
                for j in range(i + 1, m):
                    cc -= x[j] * mu[j, i]
                c[i] = cc
                x[i] = np.int64(np.rint(cc))
                dx[i] = 0
                ddx[i] = -1 if x[i] <= cc else 1
        else:
            i += 1
            if i >= m:
                break
            ddx[i] = -ddx[i]
            dx[i] = ddx[i] - dx[i]
            x[i] += dx[i]
    return count
