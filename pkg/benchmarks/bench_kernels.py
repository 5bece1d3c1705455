"""Compare the compiled kernels with their numpy fallbacks.

Usage::

    python benchmarks/bench_kernels.py [--repeat R]

Times the RK4 integrator at the sizes the shooting oracle uses (the
10-state system of a five-vehicle platoon over a few thousand steps) and the
sustained-threshold scan used for convergence timing.
"""
import argparse
import time

import numpy as np

from platoon_nash._kernels import _pykernels

try:
    from platoon_nash._kernels import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def cases():
    r = np.random.default_rng(0)
    M = r.normal(size=(10, 10)) * 0.3
    c = r.normal(size=10)
    z0 = r.normal(size=10)
    E = r.normal(size=(6001, 5)) * np.linspace(1.0, 0.0, 6001)[:, None]
    return [
        ("rk4_affine 10 states x 4000 steps", lambda k: k.rk4_affine(M, c, z0, 0.0025, 4000)),
        ("rk4_affine 2 states x 20000 steps", lambda k: k.rk4_affine(M[:2, :2], c[:2], z0[:2], 0.0005, 20000)),
        ("last_above 6001 x 5", lambda k: k.last_above(E, 0.01)),
    ]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; only the numpy kernels are timed")
    print(f"{'kernel':<36}{'numpy [ms]':>12}{'cython [ms]':>13}{'speed-up':>10}")
    for label, fn in cases():
        t_py = best_of(lambda: fn(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{label:<36}{1e3 * t_py:>12.2f}{'-':>13}{'-':>10}")
            continue
        np.testing.assert_allclose(fn(_pykernels), fn(_ckernels), rtol=1e-12, atol=1e-12)
        t_c = best_of(lambda: fn(_ckernels), args.repeat)
        print(f"{label:<36}{1e3 * t_py:>12.2f}{1e3 * t_c:>13.2f}{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
