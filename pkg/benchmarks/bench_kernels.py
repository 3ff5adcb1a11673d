"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--symbols 1000000] [--repeat 5]

Prints a table of best-of-N wall times and the speedup per kernel. Outputs
of the two backends are checked for equality before timing.
"""

import argparse
import sys
import timeit

import numpy as np

from ftnkit import _kernels_py
from ftnkit.modem import constellation

try:
    from ftnkit import _kernels
except ImportError:
    sys.exit("compiled extension not built; run `pip install -e . --no-build-isolation`")


def cases(n_symbols, rng):
    for scheme in ("QPSK", "16QAM", "64QAM"):
        pts = np.ascontiguousarray(constellation(scheme))
        y = pts[rng.integers(0, pts.size, n_symbols)] + 0.1 * (
            rng.standard_normal(n_symbols) + 1j * rng.standard_normal(n_symbols))
        yield f"nearest_index {scheme} n={n_symbols}", "nearest_index", (y, pts)
    for n in (1024, 65536):
        g = np.ascontiguousarray(np.sort(10 ** rng.uniform(-3, 3, n)))
        yield f"waterfill_cutoff n={n}", "waterfill_cutoff", (g, float(n))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--symbols", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<34} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8}")
    for name, fn, inputs in cases(args.symbols, rng):
        fast, slow = getattr(_kernels, fn), getattr(_kernels_py, fn)
        a, b = fast(*inputs), slow(*inputs)
        if fn == "nearest_index":
            assert np.array_equal(a, b), name
        else:
            assert a[0] == b[0] and np.isclose(a[1], b[1], rtol=1e-12), name
        number = 1 if fn == "nearest_index" else 200
        t_py = min(timeit.repeat(lambda: slow(*inputs), number=number, repeat=args.repeat))
        t_cy = min(timeit.repeat(lambda: fast(*inputs), number=number, repeat=args.repeat))
        t_py, t_cy = 1e3 * t_py / number, 1e3 * t_cy / number
        print(f"{name:<34} {t_py:10.3f} {t_cy:10.3f} {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
