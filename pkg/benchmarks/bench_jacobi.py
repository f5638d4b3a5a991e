"""Time the compiled Jacobi kernel against the pure-Python fallback and LAPACK.

Usage: python3 benchmarks/bench_jacobi.py [--dims 8 16 32 64] [--repeat 3]
"""

import argparse
import timeit

import numpy as np
import scipy.linalg

from qptprobe import _jacobi_py
from qptprobe.numeric import JACOBI_REL_TOL

try:
    from qptprobe import _jacobi
except ImportError:
    _jacobi = None


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def best_of(func, repeat):
    number = 1
    while timeit.timeit(func, number=number) < 0.05 and number < 10_000:
        number *= 4
    return min(timeit.repeat(func, number=number, repeat=repeat)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dims", type=int, nargs="+", default=[4, 8, 16, 32, 64, 128])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(args.seed)

    print(f"{'dim':>5} {'compiled [ms]':>14} {'python [ms]':>12} {'lapack [ms]':>12} {'speedup':>8} {'sweeps':>7} {'max |dw|':>10}")
    for n in args.dims:
        m = random_hermitian(rng, n)
        t_py = best_of(lambda: _jacobi_py.jacobi_eigh(m, JACOBI_REL_TOL), args.repeat)
        t_lapack = best_of(lambda: scipy.linalg.eigh(m, driver="evr"), args.repeat)
        w_py, _, sweeps = _jacobi_py.jacobi_eigh(m, JACOBI_REL_TOL)
        if _jacobi is not None:
            t_c = best_of(lambda: _jacobi.jacobi_eigh(m, JACOBI_REL_TOL), args.repeat)
            w_c, _, _ = _jacobi.jacobi_eigh(m, JACOBI_REL_TOL)
            dw = float(np.max(np.abs(np.sort(w_c) - np.sort(w_py))))
            compiled, speedup = f"{1e3 * t_c:14.3f}", f"{t_py / t_c:8.1f}"
        else:
            compiled, speedup, dw = f"{'n/a':>14}", f"{'n/a':>8}", float("nan")
        print(f"{n:5d} {compiled} {1e3 * t_py:12.3f} {1e3 * t_lapack:12.3f} {speedup} {sweeps:7d} {dw:10.1e}")


if __name__ == "__main__":
    main()
