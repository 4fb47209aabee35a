"""Exponential-family convolution identities.

The n-fold convolution of Exp(theta) is reached by differentiating
G(theta; x) = -(1 - exp(-theta x)) / theta in the rate, and the law of
h(X1 + ... + Xn) for increasing h is the Erlang law pulled back through h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from . import _kernels, streams
from .candidates import CandidateFunction
from .errors import CapabilityError, ParameterError, PreconditionError
from .numerics import param_derivative


def _erlang_scalar(n: int, theta: float, x: float) -> float:
    if x <= 0:
        return 0.0
    z = theta * x
    if z == 0.0:  # underflow
        return 0.0
    if z < n:
        # lower regularised gamma as a series: e^-z sum_{k>=n} z^k/k!
        term = math.exp(n * math.log(z) - z - math.lgamma(n + 1))
        total, k = 0.0, n
        while term > 1e-18 * max(total, 1e-300):
            total += term
            k += 1
            term *= z / k
        return min(1.0, total)
    term = math.exp(-z)
    s = 0.0
    for k in range(n):
        s += term
        term *= z / (k + 1)
    return max(0.0, 1.0 - s)


def erlang_cdf(n: int, theta: float, x):
    """P(X1 + ... + Xn <= x) for i.i.d. Exp(theta)."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    if not theta > 0:
        raise ParameterError("theta must be > 0")
    xa = np.asarray(x, dtype=np.float64)
    out = np.array([_erlang_scalar(n, float(theta), float(v)) for v in xa.ravel()]).reshape(xa.shape)
    return float(out) if out.ndim == 0 else out


def G(theta: float, x: float) -> float:
    """-(1 - exp(-theta x)) / theta, via expm1."""
    return math.expm1(-theta * x) / theta


MAX_STENCIL_N = 4


def convolution_via_param_derivative(n: int, theta: float, x: float, h0=None) -> float:
    """(-theta)^n / (n-1)! * d^{n-1}/dtheta^{n-1} G(theta; x)."""
    if n > MAX_STENCIL_N:
        raise CapabilityError(f"n={n}: parameter stencils go up to order {MAX_STENCIL_N - 1}")
    if n < 2:
        raise ParameterError("n must be >= 2")
    if not theta > 0:
        raise ParameterError("theta must be > 0")
    if x < 0:
        raise ParameterError("x must be >= 0")
    if x == 0:
        return 0.0
    if h0 is None:
        # keep the widest stencil point (3h for order 3 after Richardson) right of 0
        h0 = min((1 + theta) * 1e-2, theta / 8)
    d = param_derivative(lambda t: G(t, x), theta, n - 1, h0).value
    return (-theta) ** n / math.factorial(n - 1) * d


def erlang_identity_table(ns=(2, 3, 4), thetas=(0.5, 1.0, 2.0), xs=(0.1, 1.0, 5.0)) -> dict:
    rows = {"n": [], "theta": [], "x": [], "analytic": [], "derivative_form": [], "abs_diff": []}
    for n in ns:
        for th in thetas:
            for x in xs:
                a = erlang_cdf(n, th, x)
                b = convolution_via_param_derivative(n, th, x)
                for k, v in zip(rows, (n, th, x, a, b, abs(a - b))):
                    rows[k].append(v)
    return rows


@dataclass(frozen=True)
class HTransform:
    """Strictly increasing map on [0, inf) with its inverse."""

    name: str
    h: Callable[[np.ndarray], np.ndarray]
    h_inverse: Callable[[np.ndarray], np.ndarray]

    @property
    def at_zero(self) -> float:
        return float(self.h(np.array([0.0]))[0])

    @staticmethod
    def identity() -> "HTransform":
        return HTransform("identity", lambda x: np.asarray(x, float), lambda y: np.asarray(y, float))

    @staticmethod
    def square() -> "HTransform":
        return HTransform("square", lambda x: np.asarray(x, float) ** 2,
                          lambda y: np.sqrt(np.maximum(np.asarray(y, float), 0.0)))

    @staticmethod
    def from_candidate(f: CandidateFunction) -> "HTransform":
        if f.decreasing:
            raise CapabilityError(f"{f.name}: decreasing h is not supported")
        if not f.increasing or f.inverse is None:
            raise CapabilityError(f"{f.name}: h must be strictly increasing with an inverse")
        lo, hi = f.bounds
        if lo > 0 or hi < np.inf:
            raise PreconditionError(f"{f.name}: h must be defined on [0, inf)")
        return HTransform(f.name, f.fn, f.inverse)


def h_convolution_cdf(h: HTransform, n: int, theta: float, x):
    """P(h(X1 + ... + Xn) <= x) = Erlang(n, theta) CDF at h^-1(x); 0 below h(0)."""
    xa = np.atleast_1d(np.asarray(x, dtype=np.float64))
    out = np.zeros(xa.shape)
    m = xa > h.at_zero
    if m.any():
        out[m] = erlang_cdf(n, theta, h.h_inverse(xa[m]))
    return float(out[0]) if np.ndim(x) == 0 else out


@dataclass
class HConvolutionSample:
    values: np.ndarray  # sorted
    ks_distance: float
    critical: float
    seed: int

    @property
    def passes(self) -> bool:
        return self.ks_distance < self.critical

    def ecdf(self, x):
        return np.searchsorted(self.values, np.asarray(x, float), side="right") / self.values.size


def h_convolution_mc(h: HTransform, n: int, theta: float, N: int, seed: int,
                     level: float = 0.99) -> HConvolutionSample:
    """Sample h(X1 + ... + Xn) and compare with :func:`h_convolution_cdf`."""
    if N < 1000:
        raise ParameterError("N must be >= 1000")
    if not theta > 0:
        raise ParameterError("theta must be > 0")
    rows = streams.blocked(lambda rng, shape: rng.exponential(1.0 / theta, size=shape),
                           seed, streams.STREAM_A, int(N), int(n))
    v = np.sort(h.h(rows.sum(axis=1)))
    d = _kernels.ks_1samp(v, h_convolution_cdf(h, n, theta, v))
    crit = float(stats.kstwo.ppf(level, N))
    return HConvolutionSample(v, float(d), crit, seed)
