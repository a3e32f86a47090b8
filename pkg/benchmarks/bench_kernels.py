"""Compare the compiled and numpy kernel backends.

Usage::

    python3 benchmarks/bench_kernels.py [--max-qubits 10] [--repeat 5]

Prints one line per (kernel, size) with the best-of-``repeat`` wall time of
each backend and the speed-up of the compiled kernels.
"""
import argparse
import timeit

import numpy as np

from qproc import _backend


def cases(n_qubits, rng):
    dims = [2] * n_qubits
    n = 2 ** n_qubits
    M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    half = list(range(0, n_qubits, 2))
    perm = list(range(1, n_qubits)) + [0]
    return {
        "permute": lambda k: k.permute(M, dims, perm),
        "partial_trace": lambda k: k.partial_trace(M, dims, half),
        "partial_transpose": lambda k: k.partial_transpose(M, dims, half),
        "contract": lambda k: k.contract(M, M),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--min-qubits", type=int, default=4)
    ap.add_argument("--max-qubits", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    if "cython" not in _backend.available():
        print("compiled kernels are not built; only the numpy backend is available")
        return 1
    py, cy = _backend._kernels_py, _backend._compiled
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'qubits':>7}{'numpy [ms]':>13}{'cython [ms]':>13}{'speed-up':>10}")
    for q in range(args.min_qubits, args.max_qubits + 1, 2):
        for name, fn in cases(q, rng).items():
            number = max(1, 2 ** (12 - q))
            t_py = min(timeit.repeat(lambda: fn(py), number=number, repeat=args.repeat)) / number
            t_cy = min(timeit.repeat(lambda: fn(cy), number=number, repeat=args.repeat)) / number
            print(f"{name:<18}{q:>7}{t_py * 1e3:>13.4f}{t_cy * 1e3:>13.4f}{t_py / t_cy:>10.2f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
