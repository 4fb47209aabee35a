"""Candidate solutions f together with the metadata the checks rely on."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, ParameterError, ValidationError
from .measures import Support
from .numerics import invert_monotone


class Monotonicity(str, enum.Enum):
    StrictlyIncreasing = "StrictlyIncreasing"
    StrictlyDecreasing = "StrictlyDecreasing"
    Unknown = "Unknown"


Fn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class CandidateFunction:
    """A real function with optional derivative and inverse.

    Calling the object evaluates ``f`` after checking that every abscissa
    lies in ``bounds``; ``fn`` skips the check.  ``breakpoints`` lists the
    kinks of ``f`` (used to pre-split quadrature).
    """

    name: str
    domain: Support
    fn: Fn
    deriv: Optional[Fn] = None
    inverse: Optional[Fn] = None
    monotonicity: Monotonicity = Monotonicity.Unknown
    breakpoints: tuple = ()
    params: dict = field(default_factory=dict)
    bounds: tuple = None

    def __post_init__(self):
        if self.bounds is None:
            object.__setattr__(self, "bounds", self.domain.bounds)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        lo, hi = self.bounds
        bad = (x < lo) | (x > hi) | np.isnan(x)
        if np.any(bad):
            raise DomainError(f"{self.name} evaluated outside its domain [{lo}, {hi}]",
                              float(x[bad].flat[0]))
        return self.fn(x)

    @property
    def at_zero(self) -> Optional[float]:
        lo, hi = self.bounds
        if lo <= 0.0 <= hi:
            return float(self.fn(np.array([0.0]))[0])
        return None

    @property
    def increasing(self) -> bool:
        return self.monotonicity is Monotonicity.StrictlyIncreasing

    @property
    def decreasing(self) -> bool:
        return self.monotonicity is Monotonicity.StrictlyDecreasing

    def describe(self) -> dict:
        d = {"name": self.name, "domain": self.domain.value}
        d.update(self.params)
        return d

    def negated(self) -> "CandidateFunction":
        """``-f``; flips monotonicity, inverse becomes ``y -> f^-1(-y)``."""
        f = self
        mono = {Monotonicity.StrictlyIncreasing: Monotonicity.StrictlyDecreasing,
                Monotonicity.StrictlyDecreasing: Monotonicity.StrictlyIncreasing}.get(f.monotonicity,
                                                                                      Monotonicity.Unknown)
        return CandidateFunction(
            name=f"-({f.name})", domain=f.domain, fn=lambda x: -f.fn(x),
            deriv=None if f.deriv is None else (lambda x: -f.deriv(x)),
            inverse=None if f.inverse is None else (lambda y: f.inverse(-np.asarray(y, float))),
            monotonicity=mono, breakpoints=f.breakpoints, params={"negation_of": f.describe()},
            bounds=f.bounds)

    def reflected(self) -> "CandidateFunction":
        """``u -> -f(-u)``, the form of ``f`` after reflecting the measure's support."""
        f = self
        lo, hi = f.bounds
        return CandidateFunction(
            name=f"reflected({f.name})", domain=f.domain.reflected(),
            fn=lambda u: -f.fn(-np.asarray(u, float)),
            deriv=None if f.deriv is None else (lambda u: f.deriv(-np.asarray(u, float))),
            inverse=None if f.inverse is None else (lambda w: -f.inverse(-np.asarray(w, float))),
            monotonicity=f.monotonicity, breakpoints=tuple(-b for b in f.breakpoints),
            params={"reflection_of": f.describe()}, bounds=(-hi, -lo))


def linear(c: float) -> CandidateFunction:
    c = float(c)
    mono = (Monotonicity.StrictlyIncreasing if c > 0 else
            Monotonicity.StrictlyDecreasing if c < 0 else Monotonicity.Unknown)
    return CandidateFunction(
        name=f"linear({c:g})", domain=Support.FullLine,
        fn=lambda x: c * np.asarray(x, float),
        deriv=lambda x: np.full(np.shape(x), c),
        inverse=None if c == 0 else (lambda y: np.asarray(y, float) / c),
        monotonicity=mono, params={"kind": "linear", "slope": c})


def _linear_in_e_sign(A: float, C: float, e_lo: float, e_hi: float) -> Monotonicity:
    """Monotonicity of a function whose derivative is ``A*e + C`` for e in (e_lo, e_hi)."""
    if A == 0 and C == 0:
        return Monotonicity.Unknown
    ends = []
    for e in (e_lo, e_hi):
        if math.isinf(e):
            ends.append(math.copysign(math.inf, A) if A != 0 else C)
        else:
            ends.append(A * e + C)
    if min(ends) >= 0:
        return Monotonicity.StrictlyIncreasing
    if max(ends) <= 0:
        return Monotonicity.StrictlyDecreasing
    return Monotonicity.Unknown


def _numeric_inverse(fn: Fn, deriv: Optional[Fn], mono: Monotonicity, bounds) -> Optional[Fn]:
    if mono is Monotonicity.Unknown:
        return None
    lo, hi = bounds
    g_lo = lo if np.isfinite(lo) else min(-1.0, hi - 1.0)
    g_hi = hi if np.isfinite(hi) else max(1.0, lo + 1.0)
    inc = mono is Monotonicity.StrictlyIncreasing
    return lambda y: invert_monotone(fn, y, inc, g_lo, g_hi, (lo, hi), deriv)


def lau_rao_form(a: float = 0.0, b: float = 1.0, eta: float = 1.0, c: float = 0.0,
                 d: float = 0.0, lambda1: float = 1.0,
                 domain: Support | str = Support.FullLine) -> CandidateFunction:
    """Convex mix ``l1*(a + b(1 - e^{-eta x})) + (1 - l1)*(c x + d)``.

    Monotonicity is derived from the derivative's range over the domain and
    reported, not imposed.
    """
    a, b, eta, c, d, l1 = map(float, (a, b, eta, c, d, lambda1))
    if not 0.0 <= l1 <= 1.0:
        raise ParameterError("lambda1 must lie in [0, 1]")
    domain = Support(domain)
    l2 = 1.0 - l1

    def fn(x):
        x = np.asarray(x, float)
        return l1 * (a - b * np.expm1(-eta * x)) + l2 * (c * x + d)

    def deriv(x):
        x = np.asarray(x, float)
        return l1 * b * eta * np.exp(-eta * x) + l2 * c

    # derivative = A*e + C with e = exp(-eta x) ranging over the domain image
    A, C = l1 * b * eta, l2 * c
    lo, hi = domain.bounds
    if eta == 0:
        e_lo = e_hi = 1.0
    else:
        ends = sorted(math.exp(-eta * v) if np.isfinite(v) else (math.inf if -eta * v > 0 else 0.0)
                      for v in (lo, hi))
        e_lo, e_hi = ends
    mono = _linear_in_e_sign(A, C, e_lo, e_hi)
    return CandidateFunction(
        name=f"lau_rao(a={a:g},b={b:g},eta={eta:g},c={c:g},d={d:g},l1={l1:g})",
        domain=domain, fn=fn, deriv=deriv,
        inverse=_numeric_inverse(fn, deriv, mono, domain.bounds),
        monotonicity=mono,
        params={"kind": "lau_rao", "a": a, "b": b, "eta": eta, "c": c, "d": d, "lambda1": l1})


@dataclass(frozen=True)
class LemmaParams:
    a: float
    b: float
    c: float
    d: float
    r: float

    def __post_init__(self):
        for k in ("a", "b", "c", "d", "r"):
            if not getattr(self, k) > 0:
                raise ParameterError(f"lemma parameter {k} must be > 0")

    @property
    def c_max(self) -> float:
        return math.log((self.r + self.d) / (self.a + self.d))

    def valid(self) -> bool:
        # tolerance covers the boundary case c == log((r+d)/(a+d)) after rounding
        return self.c <= self.c_max + 1e-12 * max(1.0, abs(self.c))


def lemma_piecewise(p: LemmaParams) -> CandidateFunction:
    """Continuous piecewise-linear f with slopes a, -d, r and kinks at b, b+c."""
    a, b, c, d, r = p.a, p.b, p.c, p.d, p.r
    peak = a * b
    trough = -d * (b + c) + (a + d) * b

    def fn(x):
        x = np.asarray(x, float)
        return np.where(x <= b, a * x,
                        np.where(x <= b + c, peak - d * (x - b), trough + r * (x - b - c)))

    def deriv(x):
        x = np.asarray(x, float)
        # right-hand derivative at the kinks
        return np.where(x < b, a, np.where(x < b + c, -d, r)).astype(float)

    return CandidateFunction(
        name=f"lemma(a={a:g},b={b:g},c={c:g},d={d:g},r={r:g})",
        domain=Support.NonNegativeHalfLine, fn=fn, deriv=deriv, inverse=None,
        monotonicity=Monotonicity.Unknown, breakpoints=(b, b + c),
        params={"kind": "lemma_piecewise", "a": a, "b": b, "c": c, "d": d, "r": r})


def pathological_increasing() -> CandidateFunction:
    """``f(x) = exp(x/2)``: strictly increasing, but f(0) = 1."""

    def inverse(y):
        y = np.asarray(y, float)
        if np.any(y <= 0):
            raise DomainError("exp_half inverse needs y > 0", float(y[y <= 0].flat[0]))
        return 2.0 * np.log(y)

    return CandidateFunction(
        name="exp_half", domain=Support.FullLine,
        fn=lambda x: np.exp(0.5 * np.asarray(x, float)),
        deriv=lambda x: 0.5 * np.exp(0.5 * np.asarray(x, float)),
        inverse=inverse, monotonicity=Monotonicity.StrictlyIncreasing,
        params={"kind": "exp_half"})


def sine_perturbed() -> CandidateFunction:
    """``f(x) = 2x - sin x``; f' = 2 - cos x >= 1."""

    def fn(x):
        x = np.asarray(x, float)
        return 2.0 * x - np.sin(x)

    def deriv(x):
        return 2.0 - np.cos(np.asarray(x, float))

    def inverse(y):
        y = np.asarray(y, float)
        # |sin| <= 1 pins the root to [(y-1)/2, (y+1)/2]
        return invert_monotone(fn, y, True, (y - 1.0) / 2.0, (y + 1.0) / 2.0, deriv=deriv)

    return CandidateFunction(
        name="sine_perturbed", domain=Support.FullLine, fn=fn, deriv=deriv, inverse=inverse,
        monotonicity=Monotonicity.StrictlyIncreasing, params={"kind": "sine_perturbed"})


def power(p: float, domain: Support | str | None = None) -> CandidateFunction:
    """``x**p`` on R+, or its odd extension on R for odd integer ``p``."""
    p = float(p)
    if not p > 0:
        raise ParameterError("power exponent must be > 0")
    odd = p.is_integer() and int(p) % 2 == 1
    if domain is None:
        domain = Support.FullLine if odd else Support.NonNegativeHalfLine
    domain = Support(domain)
    if domain is not Support.NonNegativeHalfLine and not odd:
        raise ValidationError(f"power({p:g}) on {domain.value} needs an odd integer exponent")
    inv_p = 1.0 / p

    if odd and domain is not Support.NonNegativeHalfLine:
        def fn(x):
            x = np.asarray(x, float)
            return np.sign(x) * np.abs(x) ** p

        def deriv(x):
            return p * np.abs(np.asarray(x, float)) ** (p - 1.0)

        def inverse(y):
            y = np.asarray(y, float)
            return np.cbrt(y) if p == 3.0 else np.sign(y) * np.abs(y) ** inv_p
    else:
        def fn(x):
            return np.asarray(x, float) ** p

        def deriv(x):
            return p * np.asarray(x, float) ** (p - 1.0)

        def inverse(y):
            y = np.asarray(y, float)
            if np.any(y < 0):
                raise DomainError(f"x^{p:g} inverse needs y >= 0", float(y[y < 0].flat[0]))
            return y ** inv_p

    return CandidateFunction(
        name=f"power({p:g})", domain=domain, fn=fn, deriv=deriv, inverse=inverse,
        monotonicity=Monotonicity.StrictlyIncreasing, params={"kind": "power", "exponent": p})


def grid_function(xs, ys, monotonicity: Monotonicity | str | None = None,
                  name: str = "grid") -> CandidateFunction:
    """Piecewise-linear interpolant of a table, defined on ``[xs[0], xs[-1]]``.

    The monotonicity hint is verified against the table; without a hint it is
    inferred.  The inverse exists only for strictly monotone tables.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
        raise ValidationError("grid function needs two equal-length 1-D arrays with >= 2 points")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise ValidationError("grid function values must be finite")
    if np.any(np.diff(xs) <= 0):
        raise ValidationError("grid abscissae must be strictly ascending")
    dy = np.diff(ys)
    inferred = (Monotonicity.StrictlyIncreasing if np.all(dy > 0) else
                Monotonicity.StrictlyDecreasing if np.all(dy < 0) else Monotonicity.Unknown)
    if monotonicity is not None:
        monotonicity = Monotonicity(monotonicity)
        if monotonicity is not Monotonicity.Unknown and monotonicity is not inferred:
            raise ValidationError(f"table is not {monotonicity.value}")
    else:
        monotonicity = inferred
    slopes = dy / np.diff(xs)

    def fn(x):
        return np.interp(np.asarray(x, float), xs, ys)

    def deriv(x):
        k = np.clip(np.searchsorted(xs, np.asarray(x, float), side="right") - 1, 0, slopes.size - 1)
        return slopes[k]

    inverse = None
    if monotonicity is Monotonicity.StrictlyIncreasing:
        inverse = lambda y: np.interp(np.asarray(y, float), ys, xs)  # noqa: E731
    elif monotonicity is Monotonicity.StrictlyDecreasing:
        inverse = lambda y: np.interp(np.asarray(y, float), ys[::-1], xs[::-1])  # noqa: E731

    lo, hi = float(xs[0]), float(xs[-1])
    domain = (Support.NonNegativeHalfLine if lo >= 0 else
              Support.NonPositiveHalfLine if hi <= 0 else Support.FullLine)
    return CandidateFunction(
        name=name, domain=domain, fn=fn, deriv=deriv, inverse=inverse,
        monotonicity=monotonicity, breakpoints=tuple(float(v) for v in xs[1:-1]),
        params={"kind": "grid", "points": int(xs.size)}, bounds=(lo, hi))
