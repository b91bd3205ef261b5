"""Compare the compiled and pure-Python kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--N 1500] [--repeat 200]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from gearkdv import _pykernels as py
from gearkdv import DampingProfile, Grid, ModelParams
from gearkdv.dynamics import linear_operator

try:
    from gearkdv import _ckernels as ck
except ImportError:
    ck = None


def lapack_storage(A, kl, ku):
    n = A.shape[0]
    ab = np.zeros((2 * kl + ku + 1, n))
    rows, cols = np.nonzero(A)
    ab[kl + ku + rows - cols, cols] = A[rows, cols]
    return ab


def kernel_cases(N):
    g = Grid(L=15.0, N=N)
    A = linear_operator(ModelParams(), DampingProfile(), g)
    A = A.to_dense() if hasattr(A, "to_dense") else A.toarray()
    lhs = np.eye(A.shape[0]) * 1e3 + 0.5 * A
    ab = lapack_storage(lhs, 5, 7)
    rng = np.random.default_rng(0)
    u, v = rng.standard_normal((2, g.n_interior))
    ew = np.exp(0.5 * g.interior)
    a = np.zeros(g.n_interior)
    rhs = rng.standard_normal(A.shape[0])

    def cases(mod):
        lu, piv, _ = mod.band_lu_factor(ab, 5, 7)
        return {
            "band_lu_factor": lambda: mod.band_lu_factor(ab, 5, 7),
            "band_lu_solve": lambda: mod.band_lu_solve(lu, piv, 5, 7, rhs),
            "nonlinear_interleaved": lambda: mod.nonlinear_interleaved(u, v, g.h, 1, 1, 1, 1),
            "integrand_sums": lambda: mod.integrand_sums(u, v, ew, a, g.h, 1, 1),
        }
    return cases


def full_run(backend):
    env = dict(os.environ, GEARKDV_PURE_PYTHON="1" if backend == "python" else "0")
    code = ("import time; from gearkdv.config import parse_config; from gearkdv.cli import "
            "simulate_config; from gearkdv import BACKEND; c = parse_config('', ['T=2']); "
            "t = time.perf_counter(); simulate_config(c); print(BACKEND, time.perf_counter() - t)")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.split()
    return out[0], float(out[1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=1500)
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    cases = kernel_cases(args.N)
    mods = {"python": py} | ({"cython": ck} if ck is not None else {})
    results = {name: {k: min(timeit.repeat(f, number=1, repeat=args.repeat)) * 1e6
                      for k, f in cases(mod).items()} for name, mod in mods.items()}
    print(f"kernel timings at N={args.N} (best of {args.repeat}, microseconds)")
    print(f"{'kernel':<24}" + "".join(f"{n:>12}" for n in mods) + "     speedup")
    for k in results["python"]:
        row = [results[n][k] for n in mods]
        speed = row[0] / row[-1] if len(row) > 1 else 1.0
        print(f"{k:<24}" + "".join(f"{x:12.1f}" for x in row) + f"{speed:12.2f}")
    print("\nfull default run to T=2 (2000 steps)")
    for b in mods:
        name, secs = full_run(b)
        print(f"{b:<8} backend={name:<8} {secs:.2f} s")


if __name__ == "__main__":
    main()
