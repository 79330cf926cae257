"""Time the numba kernels against their numpy counterparts.

Both backends are imported directly, so the environment flag does not
matter here. Outputs are compared before timing.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import time

import numpy as np

from agentsmc.kernels import _numba, _numpy


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(rng):
    P, N = 512, 100
    alpha = rng.uniform(0.01, 0.6, size=(P, N))
    counts = rng.integers(5, 40, size=P).astype(np.int64)
    u = rng.random((P, N))
    yield "poibin_pmf_rows P=512 N=100", (alpha,), "poibin_pmf_rows"
    yield "condber_sample_rows P=512 N=100", (alpha, counts, u), "condber_sample_rows"

    n = 30
    log_psi = np.log(rng.random((n + 1, n + 1)))
    lbs = np.log(rng.random((n + 1, n + 1, n + 1)))
    lbr = np.log(rng.random((n + 1, n + 1)))
    lo = np.log(rng.random(n + 1))
    yield "sir_bif_step N=30", (log_psi, lbs, lbr, lo, n), "sir_bif_step"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':36s} {'numpy s':>10s} {'numba s':>10s} {'speedup':>8s}  equal")
    for label, inputs, name in cases(rng):
        f_np, f_nb = getattr(_numpy, name), getattr(_numba, name)
        a, b = f_np(*inputs), f_nb(*inputs)  # also triggers compilation
        same = np.array_equal(a, b) or np.allclose(a, b, rtol=1e-12, atol=0.0, equal_nan=True)
        t_np = best_of(lambda: f_np(*inputs), args.repeat)
        t_nb = best_of(lambda: f_nb(*inputs), args.repeat)
        print(f"{label:36s} {t_np:10.5f} {t_nb:10.5f} {t_np / t_nb:8.1f}  {same}")


if __name__ == "__main__":
    main()
