import os
import subprocess
import sys

import numpy as np
import pytest
from scipy import stats

from pcfelab import _kernels as K

needs_numba = pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba unavailable or disabled")


def _samples(n, m, seed=0, ties=False):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=n), rng.normal(0.1, 1.2, m)
    if ties:
        a, b = np.round(a, 1), np.round(b, 1)
    return np.sort(a), np.sort(b)


@pytest.mark.parametrize("n,m", [(50, 50), (200, 317), (1000, 999)])
def test_ks_cvm_matches_scipy(n, m):
    a, b = _samples(n, m)
    d, t = K.ks_cvm_2samp_numpy(a, b)
    assert d == pytest.approx(stats.ks_2samp(a, b).statistic, abs=1e-15)
    assert t == pytest.approx(stats.cramervonmises_2samp(a, b).statistic, rel=1e-10)


def test_ks_ties():
    a, b = _samples(300, 300, 1, ties=True)
    assert K.ks_cvm_2samp_numpy(a, b)[0] == pytest.approx(stats.ks_2samp(a, b).statistic, abs=1e-15)


def test_identical_samples():
    a, _ = _samples(100, 1)
    assert K.ks_cvm_2samp_numpy(a, a.copy())[0] == 0.0


def test_ks_1samp_matches_scipy():
    a, _ = _samples(5000, 1, 3)
    assert K.ks_1samp_numpy(a, stats.norm.cdf(a)) == pytest.approx(stats.kstest(a, "norm").statistic, abs=1e-15)


def test_ecf_distance_direct():
    a, b = _samples(400, 300, 5)
    t = np.linspace(0.1, 2, 7)
    ea = np.exp(1j * np.outer(t, a)).mean(1)
    eb = np.exp(1j * np.outer(t, b)).mean(1)
    assert K.ecf_sup_distance_numpy(a, b, t) == pytest.approx(np.max(np.abs(ea - eb)), abs=1e-13)


@needs_numba
@pytest.mark.parametrize("seed", range(3))
def test_backends_agree(seed):
    a, b = _samples(20_000, 20_000, seed)
    assert K.ks_cvm_2samp_numba(a, b) == K.ks_cvm_2samp_numpy(a, b)
    assert K.ks_1samp_numba(a, stats.norm.cdf(a)) == pytest.approx(K.ks_1samp_numpy(a, stats.norm.cdf(a)), abs=1e-15)
    t = np.linspace(0.05, 2, 11)
    assert K.ecf_sup_distance_numba(a, b, t) == pytest.approx(K.ecf_sup_distance_numpy(a, b, t), abs=1e-12)


@needs_numba
def test_backends_agree_with_ties():
    a, b = _samples(5000, 4000, 9, ties=True)
    assert K.ks_cvm_2samp_numba(a, b) == K.ks_cvm_2samp_numpy(a, b)


def test_disable_flag():
    code = "import pcfelab._kernels as K; print(K.BACKEND)"
    env = dict(os.environ, PCFELAB_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_mc_verdict_backend_independent():
    code = ("from pcfelab import core, candidates as C, measures as M;"
            "r = core.mc_distributional_test(C.power(3), M.make_gaussian(0, 1), 2, 20000, seed=1);"
            "print(repr(r.statistics['ks_statistic']), repr(r.statistics['cvm_statistic']), r.verdict)")
    outs = []
    for flag in ("1", "0"):
        env = dict(os.environ, PCFELAB_DISABLE_NUMBA=flag)
        outs.append(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                                   check=True).stdout)
    assert outs[0] == outs[1]
