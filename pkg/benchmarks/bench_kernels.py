"""Compare the numba and pure-numpy kernels on simulator-sized inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is called once before timing so numba's compile time is excluded.
Outputs of the two paths are checked for equality before timing.
"""

import argparse
import timeit

import numpy as np

from dducb import _kernels


def _cases(rng):
    n, k = 200, 17
    sums = rng.normal(size=(n, k))
    counts = rng.uniform(0.05, 50.0, size=(n, k))
    s = rng.uniform(10.0, 1e6, size=n)
    yield "ucb_argmax 200x17", "ucb_argmax", lambda kern: kern["ucb_argmax"](sums, counts, s, 0.04)

    draws = rng.normal(size=(1000, 100))
    means = np.array([1.0] + [0.8] * 16)

    def centralized(kern):
        return kern["centralized_counts"](draws, means, 1.0, 4.0, False, np.zeros(17), np.zeros(17),
                                          np.zeros(1, dtype=np.int64))

    yield "centralized 1000 rounds x 100 pulls", "centralized_counts", centralized


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    numba_k = _kernels._build_numba()
    numpy_k = _kernels.numpy_kernels
    rng = np.random.default_rng(0)
    print(f"{'kernel':40s} {'numpy [ms]':>12s} {'numba [ms]':>12s} {'speedup':>9s}")
    for label, _, call in _cases(rng):
        assert np.array_equal(call(numpy_k), call(numba_k)), label
        number = 1 if "centralized" in label else 200
        t_np = min(timeit.repeat(lambda: call(numpy_k), number=number, repeat=args.repeat)) / number
        t_nb = min(timeit.repeat(lambda: call(numba_k), number=number, repeat=args.repeat)) / number
        print(f"{label:40s} {t_np * 1e3:12.3f} {t_nb * 1e3:12.3f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
