"""Compiled kernels against their NumPy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints the best wall time per call for each backend, the speedup, and the
largest relative disagreement between the two results.
"""
import argparse
import timeit

import numpy as np

from diwed import _pykernels
from diwed.core import DEFAULT_INEQUALITY
from diwed.spin import spin_band

try:
    from diwed import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    a = tuple(DEFAULT_INEQUALITY.as_array())
    for n in (50, 200, 800):
        yield f"count_minimum n={n}", "count_minimum", a + (n,)
    for s in (100, 1000, 10_000):
        x, z = spin_band(s)
        psi = rng.normal(size=s + 1)
        psi /= np.linalg.norm(psi)
        yield f"dicke_moments s={s}", "dicke_moments", (psi, np.ascontiguousarray(x), np.ascontiguousarray(z))


def best_time(fn, args, repeat):
    number = max(1, int(0.2 / max(timeit.timeit(lambda: fn(*args), number=1), 1e-7)))
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def disagreement(a, b):
    """Largest difference relative to the largest magnitude; ``count_minimum`` also returns counts."""
    fa = np.array(a[0] if len(a) == 2 else a, dtype=float).ravel()
    fb = np.array(b[0] if len(b) == 2 else b, dtype=float).ravel()
    return float(np.max(np.abs(fa - fb)) / max(1.0, np.max(np.abs(fa))))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    if _ckernels is None:
        print("compiled kernels not built; timing the NumPy fallback only")
    print(f"{'case':<26}{'numpy':>12}{'cython':>12}{'speedup':>9}{'rel diff':>11}")
    for label, name, fargs in cases(rng):
        py = getattr(_pykernels, name)
        t_py = best_time(py, fargs, args.repeat)
        if _ckernels is None:
            print(f"{label:<26}{t_py * 1e6:>10.1f}us")
            continue
        cy = getattr(_ckernels, name)
        t_cy = best_time(cy, fargs, args.repeat)
        diff = disagreement(py(*fargs), cy(*fargs))
        print(f"{label:<26}{t_py * 1e6:>10.1f}us{t_cy * 1e6:>10.1f}us{t_py / t_cy:>8.1f}x{diff:>11.1e}")


if __name__ == "__main__":
    main()
