import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcfelab import candidates as C
from pcfelab import lau_rao as L
from pcfelab import measures as M
from pcfelab.errors import ParameterError, PreconditionError


def test_numeric_laplace_known_values():
    assert L.numeric_laplace(M.make_exponential(1), 1.0) == pytest.approx(0.5, abs=1e-10)
    assert L.numeric_laplace(M.make_gaussian(1, 2), 2.0) == pytest.approx(math.exp(-2 + 8), rel=1e-9)
    assert math.isinf(L.numeric_laplace(M.make_exponential(1), -1.5))
    assert L.numeric_laplace(M.make_gaussian(0, 1), 0.0) == 1.0


def test_numeric_laplace_cauchy_grid_diverges():
    xs = np.linspace(-200, 200, 40_001)
    with pytest.warns(UserWarning):
        g = M.make_grid_measure(xs, 1 / (math.pi * (1 + xs ** 2)))
    assert math.isinf(L.numeric_laplace(g, 0.5))
    assert math.isinf(L.numeric_laplace(g, -0.5))
    prof = L.scan_laplace(g, -1, 1, 5, numeric=True)
    assert prof.domain_interval == (0.0, 0.0) and prof.roots == [0.0] and prof.notes


def test_grid_gaussian_laplace():
    xs = np.linspace(-12, 14, 26_001)
    mu = M.make_grid_measure(xs, np.exp(-(xs - 1) ** 2 / 2) / math.sqrt(2 * math.pi))
    assert L.numeric_laplace(mu, 2.0) == pytest.approx(1.0, abs=1e-6)
    assert L.find_nontrivial_eta(mu, numeric=True) == pytest.approx(2.0, abs=1e-5)


@pytest.mark.parametrize("g, s", [(1, 1), (1, 2), (-0.5, 1), (0.3, 0.7)])
def test_gaussian_root(g, s):
    mu = M.make_gaussian(g, s)
    eta = L.find_nontrivial_eta(mu)
    assert eta == pytest.approx(2 * g / s ** 2, abs=1e-8)
    assert abs(L.laplace_value(mu, eta) - 1) <= 1e-10


def test_no_root_cases():
    assert L.find_nontrivial_eta(M.make_exponential(1)) is None
    assert L.find_nontrivial_eta(M.make_gaussian(0, 1)) is None


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3).filter(lambda g: abs(g) > 0.05), st.floats(0.3, 3))
def test_root_sign_follows_mean(g, s):
    mu = M.make_gaussian(g, s)
    eta = L.find_nontrivial_eta(mu, eta_lo=-200, eta_hi=200)
    assert eta is not None and eta * g > 0


def test_scan_convex_and_roots():
    prof = L.scan_laplace(M.make_gaussian(1, 1), -3, 3, 61)
    assert prof.convex_evidence <= 1e-8
    assert prof.roots[0] == 0.0 and prof.roots[1] == pytest.approx(2.0, abs=1e-8)
    assert 0.0 in prof.eta_grid
    e = L.scan_laplace(M.make_exponential(1), -3, 3, 61)
    assert e.domain_interval[0] > -1 and e.roots == [0.0]
    with pytest.raises(ParameterError):
        L.scan_laplace(M.make_exponential(1), 0.5, 3)


def test_convexity_violation_detects_concave():
    x = np.linspace(-1, 1, 11)
    assert L.midpoint_convexity_violation(x, -x ** 2) > 0
    assert L.midpoint_convexity_violation(x, np.exp(x)) == 0.0


def test_icfe_linear_and_mixture():
    mu = M.make_gaussian(1, 1)
    xs = np.linspace(-2, 2, 9)
    assert L.icfe_residual(C.linear(2), mu, xs).solves
    # the Laplace-type mixture at the nontrivial root also solves the integrated equation
    mix = L.icfe_residual(C.lau_rao_form(0, 1.5, 2, 1, 0, 0.5), mu, xs)
    assert mix.sup <= 1e-8 and mix.solves
    assert not L.icfe_residual(C.power(3), mu, xs).solves


@pytest.mark.parametrize("n", range(2, 7))
def test_elimination_identity(n):
    for x in (0.3, 0.999, 2.0, 7.5):
        r = L.second_moment_elimination(x=x, n=n)
        assert abs((r.lhs - r.rhs) - r.factored) <= 1e-10 * max(1, abs(r.lhs))
        assert r.status == L.ELIMINATED
    assert L.second_moment_elimination(x=1.0, n=n).status == L.DEGENERATE


@settings(max_examples=300, deadline=None)
@given(st.floats(1e-3, 50), st.integers(2, 6))
def test_elimination_property(x, n):
    r = L.second_moment_elimination(x=x, n=n)
    exact = (x - 1) * sum(x ** k - 1 for k in range(1, n))
    assert abs(r.factored - exact) <= 1e-10 * max(1.0, abs(x ** n - 1) + n * abs(x - 1))
    assert (r.factored > 0) == (x != 1) or r.status != L.ELIMINATED


def test_elimination_from_measure():
    mu = M.make_gaussian(1, 1)
    r = L.second_moment_elimination(mu, L.find_nontrivial_eta(mu), 2)
    assert r.x == pytest.approx(math.exp(4), rel=1e-7) and r.status == L.ELIMINATED
    with pytest.raises(ParameterError):
        L.second_moment_elimination(n=2)
    with pytest.raises(ParameterError):
        L.second_moment_elimination(x=2.0, n=1)


def test_near_degenerate():
    assert L.second_moment_elimination(x=1 + 1e-12, n=2).status == L.NEAR_DEGENERATE


def test_symmetry_identity():
    mu = M.make_gaussian(0, 1)
    for eta in (1.0, -1.0, 0.5, 2.5):
        r = L.symmetry_identity_check(mu, eta)
        assert r.difference <= 1e-8
        assert r.certificate > 0
    assert L.symmetry_identity_check(mu, 1.0).rhs == pytest.approx(0.6487212707001282, abs=1e-12)
    assert L.symmetry_identity_check(mu, -1.0).rhs == pytest.approx(-0.6487212707001282, abs=1e-12)


def test_symmetry_preconditions():
    with pytest.raises(PreconditionError):
        L.symmetry_identity_check(M.make_gaussian(1, 1), 1.0)
    with pytest.raises(PreconditionError):
        L.check_symmetric(M.make_exponential(1))
    with pytest.raises(ParameterError):
        L.symmetry_identity_check(M.make_gaussian(0, 1), 0.0)


@pytest.mark.parametrize("mu", [M.make_exponential(1), M.make_gaussian(1, 2)], ids=lambda m: m.name)
def test_laplace_at_zero(mu):
    assert L.laplace_value(mu, 0.0) == 1.0
    assert abs(L.numeric_laplace(mu, 0.0) - 1) <= 1e-10



def test_grid_laplace_at_zero():
    xs = np.linspace(0, 30, 3001)
    with pytest.warns(UserWarning):
        g = M.make_grid_measure(xs, np.exp(-xs), "NonNegativeHalfLine")
    assert abs(L.scan_laplace(g, -0.5, 0.5, 11, numeric=True).values[5] - 1) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3).filter(lambda g: abs(g) > 0.05), st.floats(0.3, 3))
def test_root_accuracy_and_elimination(g, s):
    mu = M.make_gaussian(g, s)
    eta = L.find_nontrivial_eta(mu, eta_lo=-200, eta_hi=200)
    assert abs(L.laplace_value(mu, eta) - 1) <= 1e-10
    assert eta == pytest.approx(2 * g / s ** 2, rel=1e-9)
    for n in range(2, 7):
        assert L.second_moment_elimination(mu, eta, n).factored > 0


def test_icfe_root_exponential_part():
    prof = L.icfe_residual(C.lau_rao_form(0, 1, 2, 0, 0, 1), M.make_gaussian(1, 1), np.linspace(-3, 3, 25))
    assert prof.sup <= 1e-6


def test_icfe_square_closed_form():
    # f(x) + E X^2 - E (x + X)^2 = -2x E X with E X = 1
    xs = np.linspace(0, 4, 9)
    prof = L.icfe_residual(C.power(2), M.make_exponential(1), xs)
    assert np.max(np.abs(prof.residual + 2 * xs)) <= 1e-9


def test_elimination_arithmetic():
    r = L.second_moment_elimination(x=2.0, n=3)
    assert (r.lhs, r.rhs, r.factored) == (7.0, 3.0, 4.0)
    r = L.second_moment_elimination(x=1.0, n=4)
    assert (r.lhs, r.rhs, r.factored) == (0.0, 0.0, 0.0)
