"""Independent reference computations used to freeze expected values.

Nothing here imports pcfelab: each oracle re-derives its quantity with a
different method (dense Simpson, scipy.integrate.quad, closed forms, plain
numpy sampling) so agreement with the library is meaningful.
"""

import math

import numpy as np
from scipy import integrate, special, stats


def simpson(y, h):
    """Composite Simpson on an odd number of equally spaced samples."""
    if y.size % 2 == 0:
        raise ValueError("need an odd number of nodes")
    return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


# --------------------------------------------------------------------------
# f(x) = 2x - sin x
# --------------------------------------------------------------------------

def sine_f(x):
    return 2.0 * x - np.sin(x)


def sine_df(x):
    return 2.0 - np.cos(x)


def sine_inverse(y):
    """Safeguarded Newton: f' >= 1 so the root lies in [(y-1)/2, (y+1)/2]."""
    y = np.asarray(y, float)
    lo, hi = (y - 1.0) / 2.0, (y + 1.0) / 2.0
    x = y / 2.0
    for _ in range(100):
        step = (sine_f(x) - y) / sine_df(x)
        x_new = x - step
        out = (x_new < lo) | (x_new > hi)
        x_new = np.where(out, 0.5 * (lo + hi), x_new)
        gx = sine_f(x_new) - y
        lo = np.where(gx < 0, x_new, lo)
        hi = np.where(gx >= 0, x_new, hi)
        if np.max(np.abs(x_new - x)) < 1e-15 * max(1.0, float(np.max(np.abs(x)))):
            x = x_new
            break
        x = x_new
    return x


def psi_sine(y, lam=1.0, nodes=100_001):
    """(psi, psi') for the sine-perturbed f by dense Simpson."""
    if y == 0:
        return 0.0, 0.0
    v = np.linspace(0.0, y, nodes)
    u = sine_inverse(sine_f(y) - sine_f(y - v))
    theta = lam * v - lam * u
    psi = simpson(np.expm1(theta), v[1] - v[0])
    dpsi = simpson(np.exp(theta) * (sine_df(y) - sine_df(y - v)) / sine_df(u), v[1] - v[0])
    return float(psi), float(dpsi)


# --------------------------------------------------------------------------
# x^2 under Exp(1)
# --------------------------------------------------------------------------

def equ4_power2(y=1.0, lam=1.0, nodes=200):
    """y - int_0^y exp(lam v - lam sqrt(y^2 - (y-v)^2)) dv.

    With v = s^2 the square-root kink at v = 0 disappears, so a single
    high-order Gauss-Legendre rule is enough.
    """
    t, w = np.polynomial.legendre.leggauss(nodes)
    smax = math.sqrt(y)
    s = 0.5 * smax * (t + 1.0)
    v = s * s
    g = np.exp(lam * v - lam * np.sqrt(np.maximum(y * y - (y - v) ** 2, 0.0))) * 2.0 * s
    return float(y - 0.5 * smax * np.dot(w, g))


def density_residual_power2_exp1(y):
    """int_0^y e^-u (e^-(y-u) - e^-sqrt(y^2-u^2)) du via scipy quad."""
    val, _ = integrate.quad(lambda u: math.exp(-u) * (math.exp(-(y - u)) - math.exp(-math.sqrt(y * y - u * u))),
                            0.0, y, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def density_residual_power2_mc(y, n=2_000_000, seed=12345):
    """P(U <= y, y - U <= V <= sqrt(y^2 - U^2)) for U, V i.i.d. Exp(1)."""
    rng = np.random.default_rng(seed)
    u = rng.exponential(size=n)
    v = rng.exponential(size=n)
    hit = (u <= y) & (v >= y - u) & (v <= np.sqrt(np.maximum(y * y - u * u, 0.0)))
    p = hit.mean()
    return float(p), float(math.sqrt(p * (1 - p) / n))


def double_integral_mc(y=1.0, n=1_000_000, seed=2024):
    """int_0^y int_{y-u}^{y} e^{-u-v} dv du by uniform sampling of [0,y]^2."""
    rng = np.random.default_rng(seed)
    u = rng.uniform(0, y, n)
    v = rng.uniform(0, y, n)
    g = np.where(v >= y - u, np.exp(-u - v), 0.0) * y * y
    return float(g.mean()), float(g.std(ddof=1) / math.sqrt(n))


# --------------------------------------------------------------------------
# lemma counterexample under Exp(1)
# --------------------------------------------------------------------------

def lemma_f(x, a, b, c, d, r):
    if x <= b:
        return a * x
    if x <= b + c:
        return -d * x + (a + d) * b
    return r * x - (r + d) * (b + c) + (a + d) * b


def lemma_H(x, a, b, c, d, r):
    """E f(x + X) - E f(X) - f(x) for X ~ Exp(1) by scipy quad."""
    def ef(shift):
        pts = sorted(p - shift for p in (b, b + c) if p - shift > 0)
        tot, lo = 0.0, 0.0
        for p in pts + [math.inf]:
            val, _ = integrate.quad(lambda y: lemma_f(shift + y, a, b, c, d, r) * math.exp(-y), lo, p,
                                    epsabs=1e-13, epsrel=1e-13, limit=200)
            tot += val
            lo = p
        return tot
    return ef(x) - ef(0.0) - lemma_f(x, a, b, c, d, r)


# --------------------------------------------------------------------------
# distributional magnitudes
# --------------------------------------------------------------------------

def ks_power3_gaussian(n_draws=1_000_000, seed=777):
    """Large-sample KS distance between (X1+X2)^3 and X1'^3 + X2'^3, X ~ N(0,1)."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n_draws, 2)).sum(1) ** 3
    b = (rng.standard_normal((n_draws, 2)) ** 3).sum(1)
    return float(stats.ks_2samp(a, b).statistic)


def mixture_variances(seed=99, n_draws=2_000_000):
    """Var f(X1+X2) and Var(f(X1)+f(X2)) for f = 0.5(1-e^{-2x}) + 0.5x, X ~ N(1,1)."""
    rng = np.random.default_rng(seed)

    def f(x):
        return 0.5 * (-np.expm1(-2 * x)) + 0.5 * x
    x = rng.normal(1, 1, (n_draws, 2))
    y = rng.normal(1, 1, (n_draws, 2))
    return float(np.var(f(x.sum(1)))), float(np.var(f(y).sum(1)))


def erlang(n, theta, x):
    return float(special.gammainc(n, theta * x))


if __name__ == "__main__":
    print("psi_sine(4)", psi_sine(4.0))
    ys = np.linspace(0, 5, 11)
    print("psi_sine grid", [psi_sine(float(y))[0] for y in ys])
    print("equ4_power2(1)", equ4_power2(1.0), equ4_power2(1.0, nodes=400))
    print("density_residual_power2(2)", density_residual_power2_exp1(2.0), density_residual_power2_mc(2.0))
    print("double_integral_mc", double_integral_mc(), (1 - math.exp(-1)) ** 2 - 0.0)
    print("lemma H at 0.5,1,3 (r=2e-1)", [lemma_H(x, 1, 1, 1, 1, 2 * math.e - 1) for x in (0.5, 1.0, 3.0)])
    print("ks_power3", ks_power3_gaussian())
    print("mixture variances", mixture_variances())
