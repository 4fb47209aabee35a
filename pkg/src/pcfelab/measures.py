"""Absolutely continuous probability measures on R, R+ or R-."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special

from . import streams
from .errors import ParameterError, ValidationError
from .numerics import DEFAULT_SPEC, QuadratureSpec, QuadResult, integrate


class Support(str, enum.Enum):
    FullLine = "FullLine"
    NonNegativeHalfLine = "NonNegativeHalfLine"
    NonPositiveHalfLine = "NonPositiveHalfLine"

    @property
    def bounds(self) -> tuple[float, float]:
        if self is Support.FullLine:
            return (-np.inf, np.inf)
        if self is Support.NonNegativeHalfLine:
            return (0.0, np.inf)
        return (-np.inf, 0.0)

    def reflected(self) -> "Support":
        if self is Support.NonNegativeHalfLine:
            return Support.NonPositiveHalfLine
        if self is Support.NonPositiveHalfLine:
            return Support.NonNegativeHalfLine
        return self


@dataclass(frozen=True, eq=False)
class Measure:
    """A probability law with density, CDF, sampler and optional Laplace transform.

    ``loc``/``scale`` are a centre and a spread used to position quadrature
    maps; ``lower``/``upper`` bound the set where the density can be nonzero
    (tighter than the support tag for grid measures).
    """

    name: str
    support: Support
    density: Callable[[np.ndarray], np.ndarray]
    cdf: Callable[[np.ndarray], np.ndarray]
    sampler: Callable[[np.random.Generator, tuple], np.ndarray]
    laplace: Optional[Callable[[np.ndarray], np.ndarray]] = None
    params: dict = field(default_factory=dict)
    loc: float = 0.0
    scale: float = 1.0
    lower: float = -np.inf
    upper: float = np.inf
    sf: Optional[Callable[[np.ndarray], np.ndarray]] = None
    kinks: tuple = ()
    renormalized: bool = False

    def __post_init__(self):
        lo, hi = self.support.bounds
        object.__setattr__(self, "lower", max(self.lower, lo))
        object.__setattr__(self, "upper", min(self.upper, hi))
        if self.sf is None:
            object.__setattr__(self, "sf", lambda x: 1.0 - self.cdf(x))

    def describe(self) -> dict:
        d = {"name": self.name, "support": self.support.value}
        d.update(self.params)
        if self.renormalized:
            d["renormalized"] = True
        return d

    def sample(self, seed: int, n: int, N: int, stream: int = streams.STREAM_A) -> np.ndarray:
        return sample_iid(self, n, N, seed, stream)

    def expect(self, g: Callable[[np.ndarray], np.ndarray], spec: QuadratureSpec = DEFAULT_SPEC,
               points=()) -> QuadResult:
        """``E g(X)`` by quadrature against the density.

        ``g`` is only evaluated where the density is positive, so integrands
        that overflow far out in an empty tail are harmless.
        """
        def integrand(x):
            p = self.density(x)
            out = np.zeros_like(x)
            m = p > 0
            if m.any():
                out[m] = g(x[m]) * p[m]
            return out

        pts = tuple(points) + tuple(self.kinks)
        if len(self.kinks) > spec.max_subdivisions // 4:
            spec = spec.with_(max_subdivisions=4 * len(self.kinks) + spec.max_subdivisions)
        return integrate(integrand, self.lower, self.upper, spec, pts, self.loc, self.scale)

    def total_mass(self, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
        return self.expect(np.ones_like, spec).value

    def mean(self, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
        return self.expect(lambda x: x, spec).value

    def reflected(self) -> "Measure":
        """Law of ``-X``."""
        base = self
        lap = None if base.laplace is None else (lambda eta: base.laplace(-np.asarray(eta, float)))
        return Measure(
            name=f"reflected({base.name})",
            support=base.support.reflected(),
            density=lambda x: base.density(-np.asarray(x, float)),
            cdf=lambda x: base.sf(-np.asarray(x, float)),
            sf=lambda x: base.cdf(-np.asarray(x, float)),
            sampler=lambda rng, shape: -base.sampler(rng, shape),
            laplace=lap,
            params={"reflection_of": base.describe()},
            loc=-base.loc,
            scale=base.scale,
            lower=-base.upper,
            upper=-base.lower,
            kinks=tuple(-k for k in base.kinks),
            renormalized=base.renormalized,
        )

    def effective_range(self, eps: float = 1e-17) -> tuple[float, float]:
        """Interval outside which each tail carries mass below ``eps``."""
        lo, hi = self.lower, self.upper
        if not np.isfinite(hi):
            x = self.loc + self.scale
            while self.sf(np.array([x]))[0] > eps:
                x = self.loc + 2 * (x - self.loc)
            hi = x
        if not np.isfinite(lo):
            x = self.loc - self.scale
            while self.cdf(np.array([x]))[0] > eps:
                x = self.loc + 2 * (x - self.loc)
            lo = x
        return float(lo), float(hi)


def _half_line(x, fn):
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    m = x >= 0
    out[m] = fn(x[m])
    return out


def make_exponential(lam: float) -> Measure:
    lam = float(lam)
    if not lam > 0:
        raise ParameterError(f"exponential rate must be > 0, got {lam}")

    def laplace(eta):
        eta = np.asarray(eta, dtype=np.float64)
        with np.errstate(divide="ignore"):
            return np.where(eta > -lam, lam / (lam + eta), np.inf)

    return Measure(
        name=f"Exp({lam:g})",
        support=Support.NonNegativeHalfLine,
        density=lambda x: _half_line(x, lambda t: lam * np.exp(-lam * t)),
        cdf=lambda x: _half_line(x, lambda t: -np.expm1(-lam * t)),
        sf=lambda x: np.where(np.asarray(x) >= 0, np.exp(-lam * np.maximum(x, 0.0)), 1.0),
        sampler=lambda rng, shape: rng.exponential(1.0 / lam, size=shape),
        laplace=laplace,
        params={"kind": "exponential", "rate": lam},
        loc=0.0,
        scale=1.0 / lam,
    )


def make_gaussian(gamma: float, sigma: float) -> Measure:
    gamma, sigma = float(gamma), float(sigma)
    if not sigma > 0:
        raise ParameterError(f"gaussian sigma must be > 0, got {sigma}")
    norm = 1.0 / (sigma * np.sqrt(2.0 * np.pi))

    def laplace(eta):
        eta = np.asarray(eta, dtype=np.float64)
        with np.errstate(over="ignore"):
            return np.exp(-gamma * eta + 0.5 * sigma ** 2 * eta ** 2)

    return Measure(
        name=f"N({gamma:g},{sigma:g}^2)",
        support=Support.FullLine,
        density=lambda x: norm * np.exp(-0.5 * ((np.asarray(x, float) - gamma) / sigma) ** 2),
        cdf=lambda x: special.ndtr((np.asarray(x, float) - gamma) / sigma),
        sf=lambda x: special.ndtr((gamma - np.asarray(x, float)) / sigma),
        sampler=lambda rng, shape: rng.normal(gamma, sigma, size=shape),
        laplace=laplace,
        params={"kind": "gaussian", "mean": gamma, "sigma": sigma},
        loc=gamma,
        scale=sigma,
    )


def make_grid_measure(xs, ps, support: Support | str = Support.FullLine, name: str = "grid") -> Measure:
    """Density tabulated on an ascending grid.

    The density is linearly interpolated and zero off the grid; the CDF is the
    piecewise-linear interpolant of the cumulative trapezoid sums, which makes
    inverse-CDF sampling exact for that CDF.  A table whose trapezoid mass is
    off by more than 1e-6 is rescaled and the measure carries
    ``renormalized=True``.
    """
    support = Support(support)
    xs = np.asarray(xs, dtype=np.float64)
    ps = np.asarray(ps, dtype=np.float64)
    if xs.ndim != 1 or xs.shape != ps.shape or xs.size < 2:
        raise ValidationError("grid measure needs two equal-length 1-D arrays with >= 2 points")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ps))):
        raise ValidationError("grid measure values must be finite")
    if np.any(np.diff(xs) <= 0):
        raise ValidationError("grid abscissae must be strictly ascending")
    if np.any(ps < 0):
        raise ValidationError(f"negative density at x={xs[np.argmax(ps < 0)]!r}")
    lo_s, hi_s = support.bounds
    if xs[0] < lo_s or xs[-1] > hi_s:
        raise ValidationError(f"grid [{xs[0]}, {xs[-1]}] leaves the {support.value} support")
    seg = 0.5 * (ps[1:] + ps[:-1]) * np.diff(xs)
    mass = float(np.sum(seg))
    if not mass > 0:
        raise ValidationError("grid density integrates to zero")
    renorm = abs(mass - 1.0) > 1e-6
    if renorm:
        warnings.warn(f"grid density mass {mass:.9g} rescaled to 1", stacklevel=2)
    ps = ps / mass
    cum = np.concatenate([[0.0], np.cumsum(seg / mass)])
    cum[-1] = 1.0
    x0, x1 = float(xs[0]), float(xs[-1])

    def density(x):
        x = np.asarray(x, dtype=np.float64)
        return np.interp(x, xs, ps, left=0.0, right=0.0)

    def cdf(x):
        return np.interp(np.asarray(x, dtype=np.float64), xs, cum, left=0.0, right=1.0)

    def sampler(rng, shape):
        return np.interp(rng.random(size=shape), cum, xs)

    q1, q3 = np.interp([0.25, 0.75], cum, xs)
    scale = float(q3 - q1) / 1.349 or float(x1 - x0) / 4
    med = float(np.interp(0.5, cum, xs))
    return Measure(
        name=name,
        support=support,
        density=density,
        cdf=cdf,
        sf=lambda x: 1.0 - cdf(x),
        sampler=sampler,
        laplace=None,
        params={"kind": "grid", "points": int(xs.size), "x_min": x0, "x_max": x1},
        loc=med,
        scale=max(scale, 1e-12),
        lower=x0,
        upper=x1,
        kinks=tuple(float(v) for v in xs[1:-1]),
        renormalized=renorm,
    )


def load_grid_csv(path, header=("x", "p")) -> tuple[np.ndarray, np.ndarray]:
    """Read a two-column CSV with the given header names."""
    import csv

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            head = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValidationError(f"{path}: empty CSV") from None
        if head != list(header):
            raise ValidationError(f"{path}: expected header {','.join(header)}, got {','.join(head)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 2:
                raise ValidationError(f"{path}:{lineno}: expected 2 columns")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: non-numeric value") from None
    if len(rows) < 2:
        raise ValidationError(f"{path}: need at least two data rows")
    arr = np.array(rows)
    return arr[:, 0], arr[:, 1]


def sample_iid(m: Measure, n: int, N: int, seed: int, stream: int = streams.STREAM_A) -> np.ndarray:
    """``N x n`` matrix whose rows are independent n-tuples from ``m``."""
    if n < 1 or N < 1:
        raise ParameterError("sample_iid needs n >= 1 and N >= 1")
    return streams.blocked(m.sampler, seed, stream, int(N), int(n))
