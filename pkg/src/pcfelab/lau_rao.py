"""Laplace-transform analysis and the ICFE eliminations.

L(eta) = int exp(-eta x) mu(dx).  Scans of L, its roots L(eta) = 1, the
integrated Cauchy residual, the second-moment elimination of mixture
solutions and the symmetric-measure identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .candidates import CandidateFunction
from .core import assumption_H_profile
from .errors import IntegrandError, ParameterError, PreconditionError
from .measures import Measure, Support
from .numerics import DEFAULT_SPEC, QuadratureSpec, find_root_bracketed, integrate

MAX_DOUBLINGS = 60


# --------------------------------------------------------------------------
# Laplace transform values
# --------------------------------------------------------------------------

def _tail(mu: Measure, eta: float, start: float, direction: int, spec: QuadratureSpec,
          peak_density: float) -> float:
    """Partial integrals of exp(-eta x) p(x) from ``start`` outward, doubling the reach.

    Unbounded side: stops once an increment is negligible and shrinking;
    overflow or running out of doublings means divergence.  Bounded side
    (tabulated densities): when the density has thinned out at the edge
    (below 1e-3 of its peak) but the increments still grew by more than
    their doubling width over the last two steps, the table is cutting off
    a divergent tail and the value is reported as inf.
    """
    edge = mu.upper if direction > 0 else mu.lower

    def integrand(x):
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(-eta * x) * mu.density(x)

    total = 0.0
    rates = []
    prev_inc = None
    lo = start
    for k in range(MAX_DOUBLINGS):
        hi = start + direction * mu.scale * 2.0 ** k
        if direction * (hi - edge) >= 0:
            hi = edge
        a, b = (lo, hi) if direction > 0 else (hi, lo)
        try:
            inc = integrate(integrand, a, b, spec, mu.kinks).value
        except IntegrandError:
            return math.inf
        if not math.isfinite(inc):
            return math.inf
        total += inc
        rates.append(inc / (b - a) if b > a else 0.0)
        if hi == edge:
            edge_density = float(mu.density(np.array([edge - direction * 1e-12 * max(1.0, abs(edge))]))[0])
            growing = len(rates) >= 3 and rates[-1] > rates[-2] > rates[-3] > 0
            if growing and edge_density <= 1e-3 * peak_density:
                return math.inf
            return total
        if prev_inc is not None and inc <= prev_inc and \
                inc <= max(spec.abs_tol * 1e-3, spec.rel_tol * 1e-3 * abs(total)):
            return total
        prev_inc = inc
        lo = hi
    return math.inf


def numeric_laplace(mu: Measure, eta: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Quadrature value of L(eta); ``inf`` when divergence is detected."""
    eta = float(eta)
    if eta == 0.0:
        return 1.0
    c = min(max(mu.loc, mu.lower), mu.upper)
    lo, hi = mu.effective_range()
    probe = np.concatenate([np.linspace(lo, hi, 4097), np.asarray(mu.kinks, float)])
    peak = float(np.max(mu.density(probe)))
    right = _tail(mu, eta, c, +1, spec, peak) if c < mu.upper else 0.0
    left = _tail(mu, eta, c, -1, spec, peak) if c > mu.lower else 0.0
    return right + left


def laplace_value(mu: Measure, eta: float, numeric: bool = False,
                  spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    if mu.laplace is not None and not numeric:
        return float(mu.laplace(np.array([float(eta)]))[0])
    return numeric_laplace(mu, eta, spec)


# --------------------------------------------------------------------------
# scans and roots
# --------------------------------------------------------------------------

@dataclass
class LaplaceProfile:
    eta_grid: np.ndarray
    values: np.ndarray
    finite: np.ndarray
    domain_interval: tuple
    convex_evidence: float
    roots: list
    scale: float
    source: str
    notes: list = field(default_factory=list)


def midpoint_convexity_violation(x: np.ndarray, v: np.ndarray) -> float:
    """Largest amount by which an interior value exceeds the chord of its neighbours."""
    if x.size < 3:
        return 0.0
    w = (x[2:] - x[1:-1]) / (x[2:] - x[:-2])
    chord = w * v[:-2] + (1 - w) * v[2:]
    return float(max(0.0, np.max(v[1:-1] - chord)))


def scan_laplace(mu: Measure, eta_lo: float = -5.0, eta_hi: float = 5.0, steps: int = 101,
                 numeric: bool = False, spec: QuadratureSpec = DEFAULT_SPEC) -> LaplaceProfile:
    """Tabulate L on a grid (0 always included).

    ``convex_evidence`` is the largest chord violation on the finite run
    around 0, divided by ``scale`` = max(1, max finite L).
    """
    if not eta_lo < 0 < eta_hi:
        raise ParameterError("need eta_lo < 0 < eta_hi")
    if steps < 2:
        raise ParameterError("steps must be >= 2")
    grid = np.union1d(np.linspace(eta_lo, eta_hi, steps), [0.0])
    source = "analytic" if (mu.laplace is not None and not numeric) else "numeric"
    vals = np.array([laplace_value(mu, e, numeric, spec) for e in grid])
    finite = np.isfinite(vals)
    i0 = int(np.searchsorted(grid, 0.0))
    lo = i0
    while lo > 0 and finite[lo - 1]:
        lo -= 1
    hi = i0
    while hi < grid.size - 1 and finite[hi + 1]:
        hi += 1
    run_x, run_v = grid[lo:hi + 1], vals[lo:hi + 1]
    scale = max(1.0, float(np.max(run_v)))
    convex = midpoint_convexity_violation(run_x, run_v) / scale
    roots = [0.0]
    if hi > lo:
        nz = find_nontrivial_eta(mu, float(run_x[0]), float(run_x[-1]), numeric=numeric, spec=spec,
                                 extend=False)
        if nz is not None:
            roots.append(nz)
    notes = []
    if lo == hi:
        notes.append("finite domain collapses to {0} on this grid")
    return LaplaceProfile(grid, vals, finite, (float(grid[lo]), float(grid[hi])), convex,
                          sorted(roots), scale, source, notes)


def find_nontrivial_eta(mu: Measure, eta_lo: float = -20.0, eta_hi: float = 20.0,
                        delta: float = 1e-6, numeric: bool = False,
                        spec: QuadratureSpec = DEFAULT_SPEC, extend: bool = True,
                        tol: float = 1e-14) -> Optional[float]:
    """The root eta != 0 of L(eta) = 1, or None.

    Measures on a half line have a strictly monotone L, so they have none.
    Each side is searched on [delta, eta_hi] and [eta_lo, -delta]; with
    ``extend`` an unsigned bracket end is pushed outward (doubling) while L
    stays finite.
    """
    if mu.support is not Support.FullLine:
        return None

    def g(e):
        return laplace_value(mu, e, numeric, spec) - 1.0

    for sgn, far in ((+1, eta_hi), (-1, eta_lo)):
        near = sgn * delta
        g_near = g(near)
        if not (math.isfinite(g_near) and g_near < 0):
            continue
        # pull the far end back inside the finite domain
        g_far = g(far)
        if not math.isfinite(g_far):
            inner = near
            for _ in range(60):
                mid = 0.5 * (inner + far)
                if math.isfinite(g(mid)):
                    inner = mid
                else:
                    far = mid
            far, g_far = inner, g(inner)
        while extend and math.isfinite(g_far) and g_far < 0 and abs(far) < 1e6:
            nxt = 2.0 * far
            g_nxt = g(nxt)
            if not math.isfinite(g_nxt):
                break
            far, g_far = nxt, g_nxt
        if math.isfinite(g_far) and g_far > 0:
            a, b = (near, far) if sgn > 0 else (far, near)
            return float(find_root_bracketed(g, a, b, tol=tol))
    return None


# --------------------------------------------------------------------------
# ICFE and eliminations
# --------------------------------------------------------------------------

@dataclass
class ICFEProfile:
    x: np.ndarray
    residual: np.ndarray
    sup: float
    tol: float

    @property
    def solves(self) -> bool:
        return self.sup <= self.tol


def icfe_residual(f: CandidateFunction, mu: Measure, x_grid,
                  spec: QuadratureSpec = DEFAULT_SPEC, rel_tol: float = 1e-8) -> ICFEProfile:
    """f(x) + E f(X) - int f(x + y) mu(dy) on a grid (the negative of H)."""
    h = assumption_H_profile(f, mu, x_grid, spec, rel_tol)
    res = -h.H
    return ICFEProfile(h.x, res, float(np.max(np.abs(res))), h.tol)


DEGENERATE = "Degenerate"
NEAR_DEGENERATE = "NearDegenerate"
ELIMINATED = "Eliminated"


@dataclass(frozen=True)
class EliminationRecord:
    x: float
    n: int
    lhs: float
    rhs: float
    factored: float
    status: str


def elimination_factored(x: float, n: int) -> float:
    """(x - 1)(sum_{k<n} x^k - n), with the second factor summed as x^k - 1 terms."""
    if x <= 0:
        raise ParameterError("x must be positive")
    lx = math.log(x)
    s = math.fsum(_expm1_or_inf(k * lx) for k in range(1, n))
    return (x - 1.0) * s


def _expm1_or_inf(t: float) -> float:
    # math.expm1 raises past ~709; the sign is all the elimination needs then
    return math.expm1(t) if t < 709.0 else math.inf


def second_moment_elimination(mu: Optional[Measure] = None, eta1: Optional[float] = None,
                              n: int = 2, x: Optional[float] = None,
                              near_tol: float = 1e-10) -> EliminationRecord:
    """x = E exp(-2 eta1 X); lhs = x^n - 1, rhs = n(x - 1) and their difference.

    Either pass ``x`` directly or a measure and its nontrivial root ``eta1``.
    """
    if n < 2:
        raise ParameterError("n must be >= 2")
    if x is None:
        if mu is None or eta1 is None:
            raise ParameterError("give x, or both mu and eta1")
        x = laplace_value(mu, 2.0 * eta1)
        if not math.isfinite(x):
            raise PreconditionError(f"L(2 eta1) is infinite for {mu.name}")
    x = float(x)
    fac = elimination_factored(x, n)
    if fac == 0.0:
        status = DEGENERATE
    elif abs(fac) <= near_tol:
        status = NEAR_DEGENERATE
    else:
        status = ELIMINATED
    try:
        lhs = x ** n - 1.0
    except OverflowError:
        lhs = math.inf
    return EliminationRecord(x, n, lhs, n * (x - 1.0), fac, status)


@dataclass(frozen=True)
class SymmetryRecord:
    eta: float
    lhs: float
    rhs: float
    difference: float
    certificate: float  # eta * rhs, equal to L(eta) - 1; positive means no root at eta


def check_symmetric(mu: Measure, points: int = 201, tol: float = 1e-8) -> float:
    """max |F(-x) - (1 - F(x))| over a grid; raises when above ``tol``."""
    if mu.support is not Support.FullLine:
        raise PreconditionError(f"{mu.name}: symmetric measures live on the full line")
    hi = max(abs(v) for v in mu.effective_range())
    xs = np.linspace(0.0, hi, points)
    dev = float(np.max(np.abs(mu.cdf(-xs) - mu.sf(xs))))
    if dev > tol:
        raise PreconditionError(f"{mu.name} is not symmetric about 0 (deviation {dev:.3g})")
    return dev


def symmetry_identity_check(mu: Measure, eta: float,
                            spec: QuadratureSpec = DEFAULT_SPEC) -> SymmetryRecord:
    """(L(eta) - 1)/eta against int_0^inf (e^{eta x} - e^{-eta x})(1 - F(x)) dx."""
    if eta == 0:
        raise ParameterError("eta must be nonzero")
    check_symmetric(mu)
    L = laplace_value(mu, eta, spec=spec)
    if not math.isfinite(L):
        raise PreconditionError(f"L({eta}) is infinite")

    def integrand(x):
        with np.errstate(divide="ignore"):
            ls = np.log(mu.sf(x))
        return np.exp(eta * x + ls) - np.exp(-eta * x + ls)

    rhs = integrate(integrand, 0.0, np.inf, spec, (), 0.0, mu.scale).value
    lhs = (L - 1.0) / eta
    return SymmetryRecord(float(eta), lhs, rhs, abs(lhs - rhs), eta * rhs)
