"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from screwcohom import kernels


def cases(rng):
    dim, L = 9, 4
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    W = np.ascontiguousarray(q)
    alphas = np.exp(2j * np.pi * rng.random(L))
    G = np.ascontiguousarray(rng.standard_normal((L, dim)) + 1j * rng.standard_normal((L, dim)))
    F0 = G[0].copy()
    B, P, d = 2000, 64, 7
    coeffs = np.ascontiguousarray(rng.standard_normal((B, d)) + 1j * rng.standard_normal((B, d)))
    ks = np.ascontiguousarray(rng.integers(-3, 4, size=(B, 3)), dtype=np.int64)
    ncol = np.ascontiguousarray(rng.integers(0, d, size=B), dtype=np.int64)
    xs = np.ascontiguousarray(rng.random((P, 3)))
    dmats = np.ascontiguousarray(rng.standard_normal((P, d, d)) + 0j)
    return {
        "small_d(l=8)": lambda b: b.small_d(8, 0.7),
        "small_d(l=16)": lambda b: b.small_d(16, 0.7),
        "orbit_forcing(L=4, d=9)": lambda b: b.orbit_forcing(alphas, W, G),
        "orbit_recursion(L=4, d=9)": lambda b: b.orbit_recursion(F0, alphas, W, G),
        "series_sum(2000 blocks, 64 points)": lambda b: b.series_sum(coeffs, ks, ncol, xs, dmats),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = {"python": kernels.python_backend}
    if kernels.compiled_backend is not None:
        backends["compiled"] = kernels.compiled_backend
    else:
        print("compiled backend not available; timing the Python fallback only")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<36}" + "".join(f"{name:>14}" for name in backends) + f"{'speedup':>10}")
    for label, fn in cases(rng).items():
        times = {}
        for name, backend in backends.items():
            timer = timeit.Timer(lambda: fn(backend))
            number, _ = timer.autorange()
            times[name] = min(timer.repeat(args.repeat, number)) / number
        speed = f"{times['python'] / times['compiled']:.1f}x" if "compiled" in times else "-"
        print(f"{label:<36}" + "".join(f"{times[n] * 1e6:>11.1f} us" for n in backends) + f"{speed:>10}")


if __name__ == "__main__":
    main()
