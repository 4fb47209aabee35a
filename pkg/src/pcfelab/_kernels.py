"""Hot inner loops of the Monte-Carlo checks.

Each kernel has a plain-numpy implementation and a numba ``@njit`` twin.
The twin is used unless numba is missing or ``PCFELAB_DISABLE_NUMBA`` is set
to a truthy value before import. Both paths return the same statistics up to
floating-point summation order; ``benchmarks/bench_kernels.py`` times them
against each other.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLE = os.environ.get("PCFELAB_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:
    if _DISABLE:
        raise ImportError("numba disabled by PCFELAB_DISABLE_NUMBA")
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised with the env flag
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


# --------------------------------------------------------------------------
# numpy reference path
# --------------------------------------------------------------------------

def ks_cvm_2samp_numpy(a, b):
    """KS distance and Cramer-von Mises T for two *sorted* samples."""
    n, m = a.size, b.size
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / n
    fb = np.searchsorted(b, grid, side="right") / m
    d = float(np.max(np.abs(fa - fb)))
    # 1-based ranks in the pooled sample; ties resolved with a before b
    ra = np.arange(1, n + 1) + np.searchsorted(b, a, side="left")
    rb = np.arange(1, m + 1) + np.searchsorted(a, b, side="right")
    u_a = int(np.sum((ra - np.arange(1, n + 1, dtype=np.int64)) ** 2))
    u_b = int(np.sum((rb - np.arange(1, m + 1, dtype=np.int64)) ** 2))
    return d, _cvm_t(n, m, u_a, u_b)


def _cvm_t(n, m, u_a, u_b):
    # the two terms of T are O(n) and nearly cancel: combine them exactly
    n, m = int(n), int(m)
    num = 6 * (n * int(u_a) + m * int(u_b)) - n * m * (4 * n * m - 1)
    return num / (6 * n * m * (n + m))


def ks_1samp_numpy(x, cdf_vals):
    """One-sample KS distance for sorted ``x`` with model CDF values at ``x``."""
    n = x.size
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - cdf_vals)
    d_minus = np.max(cdf_vals - (i - 1) / n)
    return float(max(d_plus, d_minus))


def ecf_sup_distance_numpy(a, b, t, chunk=64):
    """max over t of |mean exp(i t a) - mean exp(i t b)|."""
    best = 0.0
    for s in range(0, t.size, chunk):
        tt = t[s:s + chunk, None]
        dc = np.cos(tt * a).mean(axis=1) - np.cos(tt * b).mean(axis=1)
        ds = np.sin(tt * a).mean(axis=1) - np.sin(tt * b).mean(axis=1)
        best = max(best, float(np.max(np.hypot(dc, ds))))
    return best


# --------------------------------------------------------------------------
# numba path
# --------------------------------------------------------------------------

def _ks_cvm_2samp_loop(a, b):
    n = a.size
    m = b.size
    i = 0
    j = 0
    d = 0.0
    u_a = 0
    u_b = 0
    while i < n or j < m:
        if j >= m or (i < n and a[i] <= b[j]):
            v = a[i]
        else:
            v = b[j]
        # consume every copy of v from both samples, a first
        while i < n and a[i] == v:
            r = i + j + 1
            u_a += (r - (i + 1)) ** 2
            i += 1
        while j < m and b[j] == v:
            r = i + j + 1
            u_b += (r - (j + 1)) ** 2
            j += 1
        diff = abs(i / n - j / m)
        if diff > d:
            d = diff
    return d, u_a, u_b


def _ks_1samp_loop(x, cdf_vals):
    n = x.size
    d = 0.0
    for k in range(n):
        hi = (k + 1) / n - cdf_vals[k]
        lo = cdf_vals[k] - k / n
        if hi > d:
            d = hi
        if lo > d:
            d = lo
    return d


def _ecf_sup_distance_loop(a, b, t):
    na = a.size
    nb = b.size
    best = 0.0
    for k in range(t.size):
        tk = t[k]
        ca = 0.0
        sa = 0.0
        for q in range(na):
            ca += np.cos(tk * a[q])
            sa += np.sin(tk * a[q])
        cb = 0.0
        sb = 0.0
        for q in range(nb):
            cb += np.cos(tk * b[q])
            sb += np.sin(tk * b[q])
        dc = ca / na - cb / nb
        ds = sa / na - sb / nb
        dist = np.sqrt(dc * dc + ds * ds)
        if dist > best:
            best = dist
    return best


if HAVE_NUMBA:
    _ks_cvm_2samp_jit = njit(cache=True)(_ks_cvm_2samp_loop)

    def ks_cvm_2samp_numba(a, b):
        d, u_a, u_b = _ks_cvm_2samp_jit(a, b)
        return d, _cvm_t(a.size, b.size, u_a, u_b)

    ks_1samp_numba = njit(cache=True)(_ks_1samp_loop)
    ecf_sup_distance_numba = njit(cache=True)(_ecf_sup_distance_loop)
else:  # pragma: no cover
    ks_cvm_2samp_numba = ks_1samp_numba = ecf_sup_distance_numba = None


def ks_cvm_2samp(a, b):
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if HAVE_NUMBA:
        d, t = ks_cvm_2samp_numba(a, b)
        return float(d), float(t)
    return ks_cvm_2samp_numpy(a, b)


def ks_1samp(x, cdf_vals):
    x = np.ascontiguousarray(x, dtype=np.float64)
    cdf_vals = np.ascontiguousarray(cdf_vals, dtype=np.float64)
    if HAVE_NUMBA:
        return float(ks_1samp_numba(x, cdf_vals))
    return ks_1samp_numpy(x, cdf_vals)


def ecf_sup_distance(a, b, t):
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    t = np.ascontiguousarray(np.atleast_1d(t), dtype=np.float64)
    if HAVE_NUMBA:
        return float(ecf_sup_distance_numba(a, b, t))
    return ecf_sup_distance_numpy(a, b, t)
