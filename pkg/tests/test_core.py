import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles as O
from pcfelab import candidates as C
from pcfelab import core
from pcfelab import measures as M
from pcfelab.errors import (CapabilityError, DomainError, ParameterError, PreconditionError,
                            SingularityError)
from pcfelab.report import CONSISTENT, VIOLATED

EXP1 = M.make_exponential(1.0)
STD = M.make_gaussian(0.0, 1.0)

# dense-Simpson values of psi for 2x - sin x, lambda = 1, y = 0, 0.5, ..., 5
PSI_SINE = [0.0, -0.004906219432382, -0.06485919462470996, -0.2420471325215418,
            -0.5289760261157967, -0.8760582292739865, -1.2361378954592515, -1.5702352297892548,
            -1.8373130754351759, -1.9812584225009586, -1.9173083093066725]


# -- residual_equ4 / psi ----------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(0.2, 4.0), st.floats(0.0, 20.0))
def test_linear_is_a_fixed_point(c, lam, y):
    assert abs(core.residual_equ4(C.linear(c), lam, y)) <= 1e-10


def test_decreasing_linear_is_handled():
    assert abs(core.residual_equ4(C.linear(-3.0), 1.0, 2.0)) <= 1e-12


def test_residual_equ4_power2():
    f = C.power(2)
    assert core.residual_equ4(f, 1.0, 1.0) == pytest.approx(0.24268725686114712, abs=1e-12)
    assert core.residual_equ4(f, 1.0, 2.0) == pytest.approx(0.8349046769313986, abs=1e-11)
    assert core.residual_equ4(f, 2.0, 0.5) == pytest.approx(0.1213436284305735, abs=1e-12)


def test_residual_equ4_power2_oracle_recompute():
    assert core.residual_equ4(C.power(2), 1.0, 1.5) == pytest.approx(O.equ4_power2(1.5), abs=1e-11)


def test_residual_equ4_argument_checks():
    with pytest.raises(ParameterError):
        core.residual_equ4(C.linear(1), 0.0, 1.0)
    with pytest.raises(ParameterError):
        core.residual_equ4(C.linear(1), 1.0, -1.0)
    with pytest.raises(PreconditionError):
        core.residual_equ4(C.pathological_increasing(), 1.0, 1.0)  # f(0) != 0
    with pytest.raises(CapabilityError):
        core.residual_equ4(C.grid_function(np.linspace(0, 6, 7), np.sin(np.linspace(0, 6, 7))), 1.0, 1.0)


def test_psi_linear_vanishes():
    for y in np.linspace(0, 5, 11):
        r = core.psi_eval(C.linear(2.5), 1.0, float(y))
        assert abs(r.psi) <= 1e-10 and abs(r.psi_prime) <= 1e-10


def test_psi_sine_grid():
    got = [core.psi_eval(C.sine_perturbed(), 1.0, float(y)).psi for y in np.linspace(0, 5, 11)]
    assert np.max(np.abs(np.array(got) - PSI_SINE)) <= 1e-9


def test_psi_prime_sine():
    f = C.sine_perturbed()
    for y, want in [(1.0, 0.22639868442004216), (2.5, 0.7210248157880038), (4.0, 0.4336298616600461),
                    (5.0, -0.4105869848223594)]:
        assert core.psi_eval(f, 1.0, y).psi_prime == pytest.approx(want, abs=1e-9)


@pytest.mark.parametrize("lam", [1.0, 2.0])
def test_psi_prime_relation_to_slope(lam):
    # psi_prime is the theta-weighted integral; differentiating under the
    # integral sign gives d psi / dy = -lam * psi_prime (theta(y, y) = 0)
    f = C.sine_perturbed()
    h = 1e-4
    fd = (core.psi_eval(f, lam, 3.0 + h).psi - core.psi_eval(f, lam, 3.0 - h).psi) / (2 * h)
    assert -lam * core.psi_eval(f, lam, 3.0).psi_prime == pytest.approx(fd, abs=1e-7)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["sine", "power2", "power3"]), st.floats(0.3, 3.0), st.floats(1e-3, 4.0))
def test_residual_is_minus_psi(which, lam, y):
    f = {"sine": C.sine_perturbed(), "power2": C.power(2), "power3": C.power(3)}[which]
    assert abs(core.residual_equ4(f, lam, y) + core.psi_eval(f, lam, y).psi) <= 1e-10 * max(1.0, y)


def test_psi_sine_oracle_recompute():
    ref, dref = O.psi_sine(1.7, nodes=20_001)
    r = core.psi_eval(C.sine_perturbed(), 1.0, 1.7)
    assert r.psi == pytest.approx(ref, abs=1e-9)
    assert r.psi_prime == pytest.approx(dref, abs=1e-9)


def test_psi_singular_derivative():
    f = C.lau_rao_form(0, 1, 1, 0, 0, 1, "NonNegativeHalfLine")
    g = C.CandidateFunction("shifted cubic", M.Support.NonNegativeHalfLine,
                            lambda x: (np.asarray(x, float) - 1) ** 3 + 1,
                            deriv=lambda x: 3 * (np.asarray(x, float) - 1) ** 2,
                            inverse=lambda y: np.cbrt(np.asarray(y, float) - 1) + 1,
                            monotonicity=C.Monotonicity.StrictlyIncreasing)
    # f'(1) = 0
    with pytest.raises(SingularityError):
        core.psi_eval(g, 1.0, 1.0)
    assert math.isfinite(core.psi_eval(f, 1.0, 1.0).psi)


# -- density residual --------------------------------------------------------

def test_density_residual_linear_zero():
    for y in (0.5, 1.0, 3.0):
        assert abs(core.general_density_residual(C.linear(4.0), EXP1, y)) <= 1e-12


def test_density_residual_power2():
    f = C.power(2)
    assert core.general_density_residual(f, EXP1, 2.0) == pytest.approx(0.11299206092808296, abs=1e-11)
    assert core.general_density_residual(f, EXP1, 1.0) == pytest.approx(0.08927965243350854, abs=1e-11)


def test_density_residual_mc_oracle():
    p, se = O.density_residual_power2_mc(2.0, n=400_000, seed=7)
    assert abs(core.general_density_residual(C.power(2), EXP1, 2.0) - p) <= 4 * se


def test_density_residual_needs_half_line():
    with pytest.raises(PreconditionError):
        core.general_density_residual(C.linear(1), STD, 1.0)


# -- moments -----------------------------------------------------------------

@pytest.mark.parametrize("mu", [EXP1, M.make_exponential(2), STD, M.make_gaussian(1, 2)], ids=lambda m: m.name)
def test_linear_first_moment(mu):
    assert abs(core.first_moment_residual(C.linear(3), mu, 2).value) <= 1e-8
    assert abs(core.first_moment_residual(C.linear(3), mu, 3, method="tensor").value) <= 1e-8


def test_power_first_moments():
    assert abs(core.first_moment_residual(C.power(3), STD, 2).value) <= 1e-8
    r = core.first_moment_residual(C.power(2), EXP1, 2)
    assert r.value == pytest.approx(2.0, abs=1e-9)
    assert r.e_f == pytest.approx(2.0, abs=1e-10)
    # E(X1+X2+X3)^2 - 3 E X^2 = 12 - 6 for Exp(1)
    assert core.first_moment_residual(C.power(2), EXP1, 3, method="tensor").value == pytest.approx(6.0, abs=1e-6)


def test_mc_first_moment():
    r = core.first_moment_residual(C.power(2), EXP1, 3, method="mc", seed=4, N=200_000)
    assert abs(r.value - 6.0) <= 5 * r.stderr
    with pytest.raises(ParameterError):
        core.first_moment_residual(C.power(2), EXP1, 3, method="mc")
    with pytest.raises(ParameterError):
        core.first_moment_residual(C.power(2), EXP1, 5, method="tensor")


def test_discrete_rule_moments():
    xs, ws = core.discrete_rule(STD)
    assert math.fsum(ws) == pytest.approx(1.0, abs=1e-15)
    assert math.fsum(ws * xs ** 2) == pytest.approx(1.0, abs=1e-9)


# -- Monte Carlo -------------------------------------------------------------

def test_mc_linear_consistent_and_deterministic():
    a = core.mc_distributional_test(C.linear(2), EXP1, 2, 20_000, seed=11)
    b = core.mc_distributional_test(C.linear(2), EXP1, 2, 20_000, seed=11)
    assert a.verdict == CONSISTENT
    assert a.statistics == b.statistics
    assert a.statistics["ks_statistic"] == 0.0 or a.statistics["ks_pvalue"] > 1e-3


def test_mc_cubic_violated():
    r = core.mc_distributional_test(C.power(3), STD, 2, 100_000, seed=0)
    assert r.verdict == VIOLATED
    # large-sample distance from an independent generator
    assert abs(r.statistics["ks_statistic"] - 0.057213) <= 0.01


def test_mc_mixture_solution_detected():
    """A Laplace-type mixture at the root of N(1,1) fools first moments but not the law."""
    f = C.lau_rao_form(0, 1, 2, 1, 0, 0.5)
    mu = M.make_gaussian(1, 1)
    r = core.mc_distributional_test(f, mu, 2, 100_000, seed=3)
    assert r.verdict == VIOLATED
    # both sides share the first moment; the spread does not match
    assert r.statistics["mean_A"] == pytest.approx(r.statistics["mean_B"], rel=0.05)
    assert r.statistics["var_A"] > 2 * r.statistics["var_B"]


def test_mc_domain_mismatch():
    with pytest.raises(DomainError):
        core.mc_distributional_test(C.power(0.5), STD, 2, 2000, seed=0)


def test_replication_worker_invariance():
    seeds = range(5)
    r1 = core.replicate_mc(C.linear(1), EXP1, 2, 5000, seeds, workers=1)
    r2 = core.replicate_mc(C.linear(1), EXP1, 2, 5000, seeds, workers=3)
    assert np.array_equal(r1.pvalues, r2.pvalues) and r1.verdicts == r2.verdicts


def test_ks_pvalue_matches_scipy():
    from scipy.stats import ks_2samp
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=3000), rng.normal(0.05, 1, 3000)
    ref = ks_2samp(a, b, method="asymp")
    # scipy's "asymp" applies a finite-n correction; the limiting law is within a few percent
    assert core.ks_pvalue(ref.statistic, 3000, 3000) == pytest.approx(ref.pvalue, rel=0.1)
    assert core.ks_pvalue(0.0, 10, 10) == 1.0


def test_ecf_distance():
    ok = core.ecf_distance(C.linear(1), STD, 2, 5000, seed=2, n_boot=40)
    bad = core.ecf_distance(C.power(3), STD, 2, 5000, t_grid=np.linspace(0.05, 1, 20), seed=2, n_boot=40)
    assert ok.verdict == CONSISTENT and bad.verdict == VIOLATED
    assert bad.statistics["t_points"] == 20


# -- additivity and (H) -------------------------------------------------------

def test_additivity_classes():
    grid = core.product_grid(np.linspace(0.1, 3, 15), np.linspace(0.1, 3, 15))
    assert core.additivity_scan(C.linear(2), grid).classification == "Additive"
    assert core.additivity_scan(C.power(2), grid).classification == "Superadditive"
    assert core.additivity_scan(C.power(0.5), grid).classification == "Subadditive"
    wide = core.product_grid(np.linspace(0, 2 * math.pi, 41), np.linspace(0, 2 * math.pi, 41))
    s = core.additivity_scan(C.sine_perturbed(), wide)
    assert s.classification == "Mixed"
    assert len(s.witnesses("super", ((0, math.pi), (0, math.pi)))) > 0
    assert len(s.witnesses("sub", ((math.pi, 2 * math.pi), (math.pi, 2 * math.pi)))) > 0


@settings(max_examples=50, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(0.1, 10))
def test_linear_additive_everywhere(x, y, c):
    assert core.additivity_scan(C.linear(c), [(x, y)]).classification == "Additive"


def test_h_profile_linear_and_exp_half():
    xs = np.linspace(0, 3, 13)
    lin = core.assumption_H_profile(C.linear(2), STD, xs)
    assert lin.verdict == "HoldsGE" and lin.holds_le
    e = core.assumption_H_profile(C.pathological_increasing(), EXP1, xs)
    assert e.verdict == "Mixed"
    assert np.max(np.abs(e.H - (np.exp(xs / 2) - 2))) <= 1e-12 * 20 + 1e-9


def test_lemma_h_matches_quad_oracle():
    xs = [0.25, 0.75, 1.0, 1.25, 2.0, 5.0]
    table = {
        (1, 1, 0.5, 1, 2.5): [0.012837005352015929, 0.050484690274121835, 0.07766063081759711,
                              0.6806060625732968, 1.45480332182338, 1.4548033218233805],
        (1, 1, 1, 1, 1): [-0.1320969027114799, -0.5195036565527702, -0.7991528017874561,
                          -0.5901785786483112, 0.46508831586965926, 0.46508831586965904],
        (1, 1, 1, 1, 2 * math.e - 1): [0.0, -2.2e-16, -2.2e-16, 0.5680508333754828,
                                       3.4365636569180893, 3.436563656918091],
    }
    for params, want in table.items():
        f = C.lemma_piecewise(C.LemmaParams(*params))
        h = core.assumption_H_profile(f, EXP1, xs)
        assert np.max(np.abs(h.H - want)) <= 1e-10, params


def test_lemma_hprime():
    good = core.lemma_hprime_check(C.LemmaParams(1, 1, 0.5, 1, 2.5), np.linspace(0, 1, 21))
    assert good.valid and good.min_hprime >= 0 and good.max_discrepancy <= 1e-6
    bad = core.lemma_hprime_check(C.LemmaParams(1, 1, 1, 1, 1), np.linspace(0, 1, 21))
    assert not bad.valid and bad.min_hprime < 0
    with pytest.raises(ParameterError):
        core.lemma_hprime_check(C.LemmaParams(1, 1, 1, 1, 1), [2.0])


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 3), st.floats(0.2, 3), st.floats(0.05, 2), st.floats(0.1, 3), st.floats(0.1, 8))
def test_lemma_hprime_sign_follows_validity(a, b, c, d, r):
    p = C.LemmaParams(a, b, c, d, r)
    chk = core.lemma_hprime_check(p, np.linspace(0, b, 9), cross_check=False)
    assert (chk.min_hprime >= -1e-12 * (r + d)) == (p.valid() or abs(c - p.c_max) < 1e-9)


# -- linearity and sign link ------------------------------------------------------

@settings(max_examples=15, deadline=None)
@given(st.integers(-3, 3), st.floats(0.3, 3.0), st.floats(0.05, 8.0))
def test_residual_invariant_in_scale(k, lam, y):
    assert abs(core.residual_equ4(C.linear(10.0 ** k), lam, y)) <= 1e-10


@pytest.mark.parametrize("mu", [EXP1, M.make_exponential(2), STD, M.make_gaussian(1, 2)], ids=lambda m: m.name)
def test_linear_first_moment_n4(mu):
    assert abs(core.first_moment_residual(C.linear(0.5), mu, 4, method="tensor").value) <= 1e-8


@pytest.mark.slow
@pytest.mark.parametrize("mu", [EXP1, M.make_exponential(2), STD, M.make_gaussian(1, 2)], ids=lambda m: m.name)
def test_linear_mc_n4(mu):
    rep = core.replicate_mc(C.linear(3), mu, 4, 100_000, range(100))
    assert rep.n_consistent >= 99


@settings(max_examples=20, deadline=None)
@given(st.floats(1.05, 3.0), st.floats(0.5, 2.0), st.floats(0.2, 3.0))
def test_superadditive_implies_nonnegative_density_residual(p, lam, y):
    f = C.power(p)
    grid = core.product_grid(np.linspace(0, y, 9), np.linspace(0, y, 9))
    if core.additivity_scan(f, grid).classification == "Superadditive":
        assert core.general_density_residual(f, M.make_exponential(lam), y) >= -1e-10


# -- spec examples not covered above --------------------------------------------------

def test_density_residual_grid_measure():
    xs = np.linspace(0, 40, 4001)
    with pytest.warns(UserWarning):
        g = M.make_grid_measure(xs, np.exp(-xs), "NonNegativeHalfLine")
    v = core.general_density_residual(C.power(2), g, 2.0)
    assert abs(v - 0.11299206092808296) <= 1e-3


def test_ecf_at_zero_frequency():
    r = core.ecf_distance(C.power(3), STD, 2, 5000, t_grid=[0.0], seed=1, n_boot=5)
    assert r.statistics["distance"] == 0.0


def test_sine_mixed_with_witness_in_pi_box():
    grid = core.product_grid(np.linspace(0, 2 * math.pi, 61), np.linspace(0, 2 * math.pi, 61))
    s = core.additivity_scan(C.sine_perturbed(), grid)
    box = ((math.pi, 1.5 * math.pi), (math.pi, 1.5 * math.pi))
    assert s.classification == "Mixed" and len(s.witnesses("sub", box)) > 0


def test_lemma_witness_for_r_equal_e():
    f = C.lemma_piecewise(C.LemmaParams(1, 1, 1, 1, math.e))
    grid = core.product_grid(np.linspace(0, 0.5, 12)[1:-1], np.linspace(1, 1.5, 12)[1:-1])
    assert len(core.additivity_scan(f, grid).witnesses("sub", ((0, 0.5), (1, 1.5)))) == 100


def test_lemma_valid_half_width_holds_ge():
    p = C.LemmaParams(1, 1, 0.5, 1, 2.5)
    assert p.valid()
    h = core.assumption_H_profile(C.lemma_piecewise(p), EXP1, np.linspace(0, 20, 201))
    assert h.H.min() >= -1e-8 and h.verdict == "HoldsGE"


def test_linear_h_identically_zero():
    h = core.assumption_H_profile(C.linear(7), EXP1, np.linspace(0, 5, 11))
    assert np.max(np.abs(h.H)) <= 1e-12 * 35
