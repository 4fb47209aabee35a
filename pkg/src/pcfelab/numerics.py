"""Quadrature, parameter differentiation and root finding.

The integrators work on *vectorised* integrands: ``g`` receives a 1-D float
array of abscissae and must return an array of the same shape.  All
subdivision work for one refinement sweep is evaluated in a single call, and
the final sum runs over intervals in left-to-right order with ``math.fsum``,
so a fixed spec always gives the same bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import BracketError, DomainError, IntegrandError, ParameterError

# Gauss-Kronrod 7/15 pair on [-1, 1] (QUADPACK qk15 constants)
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])          # ascending, 15 nodes
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(15)
_GW[1:7:2] = _WG[:3]
_GW[7] = _WG[3]
_GW[9:14:2] = _WG[2::-1]
_EPS = np.finfo(float).eps
_UFLOW = np.finfo(float).tiny


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for :func:`integrate`.

    ``transform`` is informational: infinite bounds always select the
    matching change of variables ("semi-infinite" or "full-line").
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 4000
    transform: str | None = None

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ParameterError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ParameterError("max_subdivisions must be >= 1")

    def with_(self, **kw) -> "QuadratureSpec":
        return replace(self, **kw)


DEFAULT_SPEC = QuadratureSpec()


class QuadResult(NamedTuple):
    value: float
    error: float
    converged: bool
    n_eval: int
    n_intervals: int


class DerivResult(NamedTuple):
    value: float
    error: float


# --------------------------------------------------------------------------
# changes of variables
# --------------------------------------------------------------------------

def _mapping(lo: float, hi: float, loc: float, scale: float):
    """Return (x_of_t, jac_of_t, t_of_x, t_lo, t_hi, name)."""
    if np.isfinite(lo) and np.isfinite(hi):
        return (lambda t: t, lambda t: np.ones_like(t), lambda x: x, lo, hi, None)
    if np.isfinite(lo):
        a = lo
        return (lambda t: a + scale * t / (1.0 - t),
                lambda t: scale / (1.0 - t) ** 2,
                lambda x: (x - a) / (scale + (x - a)),
                0.0, 1.0, "semi-infinite")
    if np.isfinite(hi):
        b = hi
        return (lambda t: b - scale * t / (1.0 - t),
                lambda t: scale / (1.0 - t) ** 2,
                lambda x: (b - x) / (scale + (b - x)),
                0.0, 1.0, "semi-infinite")

    def t_of_x(x):
        u = (x - loc) / scale
        return 0.0 if u == 0 else (-1.0 + math.sqrt(1.0 + 4.0 * u * u)) / (2.0 * u)

    return (lambda t: loc + scale * t / (1.0 - t * t),
            lambda t: scale * (1.0 + t * t) / (1.0 - t * t) ** 2,
            t_of_x, -1.0, 1.0, "full-line")


def _gk15(h, a: np.ndarray, b: np.ndarray, x_of_t):
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    t = center[:, None] + half[:, None] * _NODES[None, :]
    vals = np.asarray(h(t.ravel()), dtype=np.float64).reshape(t.shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        k = np.argwhere(bad)[0]
        raise IntegrandError("non-finite integrand value", float(x_of_t(t[k[0], k[1]])))
    kron = vals @ _KW * half
    gauss = vals @ _GW * half
    resabs = np.abs(vals) @ _KW * np.abs(half)
    mean = (kron / np.where(half == 0, 1.0, half) * 0.5)[:, None]
    resasc = np.abs(vals - mean) @ _KW * np.abs(half)
    err = np.abs(kron - gauss)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc != 0) & (err != 0), scaled, err)
    floor = 50.0 * _EPS * resabs
    err = np.where(resabs > _UFLOW / (50.0 * _EPS), np.maximum(floor, err), err)
    return kron, err


def integrate(g: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
              spec: QuadratureSpec = DEFAULT_SPEC, points: Sequence[float] = (),
              loc: float = 0.0, scale: float = 1.0) -> QuadResult:
    """Adaptive Gauss-Kronrod (7/15) integral of ``g`` over ``[lo, hi]``.

    Infinite endpoints are mapped onto a bounded interval; ``loc``/``scale``
    position that map (use the measure's centre and spread).  ``points`` are
    kink abscissae; the initial partition is split there.

    Returns a :class:`QuadResult`; ``converged`` is False when the
    subdivision budget ran out before the requested accuracy.
    """
    lo = float(lo)
    hi = float(hi)
    if lo > hi:
        raise ParameterError(f"integrate: lo={lo} > hi={hi}")
    if lo == hi:
        return QuadResult(0.0, 0.0, True, 0, 0)
    if scale <= 0:
        raise ParameterError("scale must be positive")
    x_of_t, jac, t_of_x, tlo, thi, _ = _mapping(lo, hi, loc, scale)
    if np.isfinite(lo) and np.isfinite(hi):
        h = g
    else:
        def h(t):
            x = x_of_t(t)
            with np.errstate(over="ignore", invalid="ignore"):
                v = np.asarray(g(x), dtype=np.float64)
                j = jac(t)
                # an underflowed integrand times an exploding Jacobian is 0
                return np.where(v == 0.0, 0.0, v * j)

    cuts = sorted({tlo, thi, *(float(t_of_x(p)) for p in points if lo < p < hi)})
    edges = np.array(cuts)
    a = edges[:-1]
    b = edges[1:]
    width = thi - tlo
    done_a: list[np.ndarray] = []
    done_v: list[np.ndarray] = []
    done_e: list[np.ndarray] = []
    n_eval = 0
    converged = False
    while True:
        kron, err = _gk15(h, a, b, x_of_t)
        n_eval += 15 * a.size
        acc_v = np.concatenate(done_v + [kron])
        acc_e = np.concatenate(done_e + [err])
        total = math.fsum(acc_v)
        tol = max(spec.abs_tol, spec.rel_tol * abs(total))
        if math.fsum(acc_e) <= tol:
            converged = True
            break
        n_int = acc_v.size
        if n_int >= spec.max_subdivisions:
            break
        keep = err <= tol * (b - a) / width
        # always refine at least the worst interval
        if keep.all():
            keep[np.argmax(err)] = False
        ra, rb = a[~keep], b[~keep]
        mid = 0.5 * (ra + rb)
        if np.any((mid <= ra) | (mid >= rb)):
            break  # intervals at machine resolution
        done_a.append(a[keep])
        done_v.append(kron[keep])
        done_e.append(err[keep])
        a = np.concatenate([ra, mid])
        b = np.concatenate([mid, rb])
    left = np.concatenate(done_a + [a])
    order = np.argsort(left, kind="stable")
    vals = np.concatenate(done_v + [kron])[order]
    errs = np.concatenate(done_e + [err])[order]
    return QuadResult(math.fsum(vals), math.fsum(errs), converged, n_eval, vals.size)


def integrate2d(g: Callable[[float, np.ndarray], np.ndarray], x_lo: float, x_hi: float,
                y_lo, y_hi, spec: QuadratureSpec = DEFAULT_SPEC,
                x_points: Sequence[float] = (), y_points=None,
                x_loc: float = 0.0, x_scale: float = 1.0,
                y_loc: float = 0.0, y_scale: float = 1.0) -> QuadResult:
    """Iterated integral ``int_{x_lo}^{x_hi} int_{y_lo(x)}^{y_hi(x)} g(x, y) dy dx``.

    ``y_lo``/``y_hi`` are constants or callables of the outer variable, and
    ``y_points`` may be a callable returning inner kink abscissae for a given
    ``x``.  The reported error is the outer estimate plus the largest inner
    estimate times the outer measure (or just the largest inner one when the
    outer range is infinite).
    """
    ylo = y_lo if callable(y_lo) else (lambda x, c=float(y_lo): c)
    yhi = y_hi if callable(y_hi) else (lambda x, c=float(y_hi): c)
    ypts = y_points if callable(y_points) else (lambda x, c=tuple(y_points or ()): c)
    inner_err = [0.0]
    inner_ok = [True]
    evals = [0]

    def outer(xs):
        out = np.empty_like(xs)
        for k, x in enumerate(xs):
            a, b = ylo(x), yhi(x)
            sign = 1.0
            if a > b:
                a, b, sign = b, a, -1.0
            r = integrate(lambda y, x=x: g(x, y), a, b, spec, ypts(x), y_loc, y_scale)
            out[k] = sign * r.value
            inner_err[0] = max(inner_err[0], r.error)
            inner_ok[0] &= r.converged
            evals[0] += r.n_eval
        return out

    r = integrate(outer, x_lo, x_hi, spec, x_points, x_loc, x_scale)
    span = (x_hi - x_lo) if np.isfinite(x_hi - x_lo) else 1.0
    return QuadResult(r.value, r.error + inner_err[0] * span, r.converged and inner_ok[0],
                      r.n_eval + evals[0], r.n_intervals)


# --------------------------------------------------------------------------
# differentiation with respect to a parameter
# --------------------------------------------------------------------------

def _stencil(g, theta, h, order):
    if order == 1:
        pts = (theta + h, theta - h)
        v = [g(p) for p in pts]
        return (v[0] - v[1]) / (2 * h), v
    if order == 2:
        v = [g(theta + h), g(theta), g(theta - h)]
        return (v[0] - 2 * v[1] + v[2]) / (h * h), v
    v = [g(theta + 2 * h), g(theta + h), g(theta - h), g(theta - 2 * h)]
    return (v[0] - 2 * v[1] + 2 * v[2] - v[3]) / (2 * h ** 3), v


def param_derivative(g: Callable[[float], float], theta0: float, order: int = 1,
                     h0: float | None = None, levels: int = 4) -> DerivResult:
    """Central-difference derivative of order 1-3 with Richardson extrapolation.

    The step halves ``levels - 1`` times from ``h0`` (default
    ``(1 + |theta0|) * 1e-2``); every stencil used has an error expansion in
    even powers of ``h``, so each Richardson column removes one power of
    ``h**2``.  ``error`` is the change between the last two diagonal entries.
    """
    if order not in (1, 2, 3):
        raise ParameterError("param_derivative supports order 1, 2 or 3")
    if levels < 1:
        raise ParameterError("levels must be >= 1")
    h = (1.0 + abs(theta0)) * 1e-2 if h0 is None else float(h0)
    table: list[list[float]] = []
    for i in range(levels):
        d, vals = _stencil(g, theta0, h / 2 ** i, order)
        if not all(np.isfinite(vals)):
            raise IntegrandError("non-finite value in derivative stencil", theta0)
        row = [d]
        for j in range(1, i + 1):
            row.append(row[j - 1] + (row[j - 1] - table[i - 1][j - 1]) / (4 ** j - 1))
        table.append(row)
    best = table[-1][-1]
    err = abs(best - table[-2][-1]) if levels > 1 else float("nan")
    return DerivResult(best, err)


# --------------------------------------------------------------------------
# roots and inverses
# --------------------------------------------------------------------------

def find_root_bracketed(g: Callable[[float], float], lo: float, hi: float,
                        tol: float = 1e-12, maxiter: int = 400) -> float:
    """Bisection root of ``g`` on ``[lo, hi]``.

    Stops when ``|g(root)| <= tol`` or the bracket is narrower than ``tol``.
    """
    flo, fhi = g(lo), g(hi)
    if not (np.isfinite(flo) and np.isfinite(fhi)):
        raise IntegrandError("non-finite value at bracket endpoint", lo if not np.isfinite(flo) else hi)
    if flo == 0:
        return float(lo)
    if fhi == 0:
        return float(hi)
    if flo * fhi > 0:
        raise BracketError(f"no sign change on [{lo}, {hi}]: g(lo)={flo}, g(hi)={fhi}")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        fm = g(mid)
        if not np.isfinite(fm):
            raise IntegrandError("non-finite value during bisection", mid)
        if abs(fm) <= tol or (hi - lo) <= tol or mid in (lo, hi):
            return float(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return float(0.5 * (lo + hi))


def invert_monotone(f: Callable[[np.ndarray], np.ndarray], y, increasing: bool = True,
                    guess_lo=0.0, guess_hi=1.0,
                    domain: tuple[float, float] = (-np.inf, np.inf),
                    deriv: Callable[[np.ndarray], np.ndarray] | None = None,
                    xtol: float = 1e-12) -> np.ndarray:
    """Vectorised bracketed bisection for ``f(x) = y`` with a Newton polish.

    The bracket starts at ``[guess_lo, guess_hi]`` and is doubled outwards,
    clipped to ``domain``, until it straddles every target.
    """
    y = np.asarray(y, dtype=np.float64)
    shape = y.shape
    y = y.ravel()
    s = 1.0 if increasing else -1.0
    dlo, dhi = domain
    lo = np.maximum(np.broadcast_to(np.asarray(guess_lo, float), shape).ravel(), dlo)
    hi = np.minimum(np.broadcast_to(np.asarray(guess_hi, float), shape).ravel(), dhi)
    for _ in range(2100):
        need_lo = s * f(lo) > s * y
        need_hi = s * f(hi) < s * y
        if not (need_lo.any() or need_hi.any()):
            break
        w = hi - lo + 1.0
        at_lo = need_lo & (lo <= dlo)
        at_hi = need_hi & (hi >= dhi)
        if (at_lo | at_hi).any():
            k = int(np.argmax(at_lo | at_hi))
            raise DomainError("target outside the range of f on its domain", float(y[k]))
        lo = np.where(need_lo, np.maximum(lo - 2 * w, dlo), lo)
        hi = np.where(need_hi, np.minimum(hi + 2 * w, dhi), hi)
    else:
        raise DomainError("could not bracket inverse", float(y[0]))
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        go_right = s * f(mid) < s * y
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
        if np.all(hi - lo <= xtol * (1.0 + np.abs(mid))):
            break
    x = 0.5 * (lo + hi)
    if deriv is not None:
        fx = f(x)
        d = deriv(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_new = x - (fx - y) / d
        ok = np.isfinite(x_new) & (x_new >= lo) & (x_new <= hi)
        ok &= np.abs(f(np.where(ok, x_new, x)) - y) <= np.abs(fx - y)
        x = np.where(ok, x_new, x)
    return x.reshape(shape)
