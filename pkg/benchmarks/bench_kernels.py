"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--sizes 10000,100000,1000000] [--repeat 5]

Run once with PCFELAB_DISABLE_NUMBA=1 to confirm the fallback path is what
the library uses when numba is switched off; the table below always times
both implementations directly.
"""

import argparse
import timeit

import numpy as np

from pcfelab import _kernels


def _best(fn, repeat):
    fn()  # warm-up (numba compiles on first call)
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="10000,100000,1000000")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"active backend: {_kernels.BACKEND}")
    if not _kernels.HAVE_NUMBA:
        print("numba unavailable; only numpy timings are shown")
    print(f"{'kernel':<14}{'N':>10}{'numpy [ms]':>14}{'numba [ms]':>14}{'speedup':>10}")
    for n in (int(s) for s in args.sizes.split(",")):
        a = np.sort(rng.exponential(size=n))
        b = np.sort(rng.exponential(size=n))
        cdf = -np.expm1(-a)
        t = np.linspace(0.05, 2.0, 40)
        m = min(n, 20_000)  # ECF cost is N * len(t); keep it comparable to a real run
        cases = {
            "ks_cvm_2samp": (lambda: _kernels.ks_cvm_2samp_numpy(a, b),
                             lambda: _kernels.ks_cvm_2samp_numba(a, b)),
            "ks_1samp": (lambda: _kernels.ks_1samp_numpy(a, cdf),
                         lambda: _kernels.ks_1samp_numba(a, cdf)),
            "ecf_sup": (lambda: _kernels.ecf_sup_distance_numpy(a[:m], b[:m], t),
                        lambda: _kernels.ecf_sup_distance_numba(a[:m], b[:m], t)),
        }
        for name, (f_np, f_nb) in cases.items():
            t_np = _best(f_np, args.repeat) * 1e3
            if _kernels.HAVE_NUMBA:
                r_np, r_nb = np.asarray(f_np()), np.asarray(f_nb())
                assert np.allclose(r_np, r_nb, rtol=1e-12, atol=1e-12), name
                t_nb = _best(f_nb, args.repeat) * 1e3
                print(f"{name:<14}{m if name == 'ecf_sup' else n:>10}{t_np:>14.3f}{t_nb:>14.3f}{t_np / t_nb:>10.1f}")
            else:
                print(f"{name:<14}{n:>10}{t_np:>14.3f}{'-':>14}{'-':>10}")


if __name__ == "__main__":
    main()
