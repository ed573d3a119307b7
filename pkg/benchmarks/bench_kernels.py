"""Compare the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py            # kernel timings
    python benchmarks/bench_kernels.py --fit      # plus one full fit per backend

Timings are best-of-``--repeat`` wall clock after a warm-up call, so JIT
compilation is excluded. The full-fit comparison runs each backend in a
fresh interpreter because the backend is chosen at import time.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from dynrep import kernels
from dynrep._accel import NUMBA_AVAILABLE

FIT_SNIPPET = """
import time
from dynrep.synthesis import GeneratorSpec, generate
from dynrep.trainer import TrainConfig, fit
sim = generate(GeneratorSpec(seed=1))
t0 = time.perf_counter()
_, rep = fit(sim.network, TrainConfig(seed=1), 6, sim.truth.basis, 4, 5)
print(f"{time.perf_counter() - t0:.2f} {rep.iterations_run}")
"""


def best_of(fn, repeat, number):
    fn()
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def loglik_case(rng, n, M, R):
    alpha = rng.normal(0, 1, (n, M, R))
    beta = rng.normal(0, 1, (M, R))
    adj = (rng.random((n, M, M)) < 0.3).astype(np.uint8)
    mask = ~np.eye(M, dtype=bool)[None].repeat(n, axis=0)
    return alpha, beta, adj, mask


def lloyd_case(rng, M, P, L):
    X = rng.normal(0, 1, (M, P))
    return X, X[rng.choice(M, L, replace=False)].copy(), 300


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--fit", action="store_true", help="also time a full fit with each backend")
    args = ap.parse_args()
    if not NUMBA_AVAILABLE:
        sys.exit("numba is not installed; nothing to compare (pip install numba)")

    rng = np.random.default_rng(0)
    rows = []
    for n, M, R in [(20, 50, 6), (40, 100, 6), (20, 200, 8)]:
        case = loglik_case(rng, n, M, R)
        rows.append((f"loglik n={n} M={M} R={R}",
                     best_of(lambda: kernels.loglik_residual_numpy(*case), args.repeat, 20),
                     best_of(lambda: kernels.loglik_residual_numba(*case), args.repeat, 20)))
    for M, P, L in [(50, 36, 4), (200, 36, 5), (1000, 8, 10)]:
        case = lloyd_case(rng, M, P, L)
        rows.append((f"lloyd  M={M} P={P} L={L}",
                     best_of(lambda: kernels.lloyd_numpy(*case), args.repeat, 20),
                     best_of(lambda: kernels.lloyd_numba(*case), args.repeat, 20)))

    print(f"{'kernel':<28}{'numpy ms':>10}{'numba ms':>10}{'speedup':>9}")
    for name, a, b in rows:
        print(f"{name:<28}{a * 1e3:>10.3f}{b * 1e3:>10.3f}{a / b:>8.1f}x")

    if args.fit:
        for flag in ("0", "1"):
            env = dict(os.environ, DYNREP_NUMBA=flag)
            out = subprocess.run([sys.executable, "-c", FIT_SNIPPET], env=env, capture_output=True, text=True, check=True)
            secs, iters = out.stdout.split()
            print(f"full fit (M=50, n=20, R=6), {'numba' if flag == '1' else 'numpy'}: {secs}s, {iters} iterations")


if __name__ == "__main__":
    main()
