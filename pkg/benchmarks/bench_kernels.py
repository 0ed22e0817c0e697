"""Compare the compiled and pure-Python iteration kernels.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--sizes 3,10,25,50]

Prints one row per kernel and size with the best-of-``repeat`` time of each
backend, their speed-up ratio and the largest difference in output.
"""

import argparse
import timeit

import numpy as np

from ttodeco._kernels import _fallback

try:
    from ttodeco._kernels import _core
except ImportError:  # extension not built
    _core = None


def sinkhorn_case(n, rng):
    P = rng.uniform(0.05, 2.0, (n, n)) ** 2
    return (P, 1e-28, 1000), lambda out: np.concatenate([out[0], out[1]])


def procrustes_case(n, rng):
    A = np.ascontiguousarray(rng.standard_normal((n, n)))
    return (A, 0.0, 1e-12, 100), lambda out: out[1]


KERNELS = {
    "sinkhorn_balance": sinkhorn_case,
    "tandem_procrustes_eye": procrustes_case,
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", default="3,10,25,50")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _core is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
    sizes = [int(s) for s in args.sizes.split(",")]
    print(f"{'kernel':<24}{'n':>4}{'cython [ms]':>14}{'python [ms]':>14}{'speed-up':>10}{'max diff':>11}")
    for name, make in KERNELS.items():
        for n in sizes:
            call_args, pick = make(n, np.random.default_rng([args.seed, n]))
            fast, slow = getattr(_core, name), getattr(_fallback, name)
            times = []
            for fn in (fast, slow):
                number = max(1, int(0.2 / max(timeit.timeit(lambda: fn(*call_args), number=1), 1e-6)))
                best = min(timeit.repeat(lambda: fn(*call_args), number=number, repeat=args.repeat))
                times.append(1e3 * best / number)
            diff = np.abs(pick(fast(*call_args)) - pick(slow(*call_args))).max()
            print(f"{name:<24}{n:>4}{times[0]:>14.4f}{times[1]:>14.4f}{times[1] / times[0]:>10.1f}{diff:>11.1e}")


if __name__ == "__main__":
    main()
