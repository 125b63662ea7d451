"""Compare the compiled sweep kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

Times ``separable_band_extrema`` and ``separable_count_grid`` on free-Laplacian
phase grids of increasing size and checks both backends return identical
arrays.
"""

from __future__ import annotations

import argparse
import json
import math
import timeit

import numpy as np

from latticebands import _kernels_py
from latticebands.laplace1d import eigenvalues_1d

try:
    from latticebands import _kernels as compiled
except ImportError:
    compiled = None

CASES = [((5, 4), 129), ((8, 10), 201), ((8, 10), 513), ((30, 30), 129)]


def operands(p: int, q: int, resolution: int):
    grid = np.linspace(0.0, math.pi, resolution)
    return np.ascontiguousarray(eigenvalues_1d(p, grid)), np.ascontiguousarray(eigenvalues_1d(q, grid))


def best_of(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--json", help="write results to this file")
    args = parser.parse_args(argv)

    if compiled is None:
        print("compiled extension not built; only the fallback is timed")
    rows = []
    header = f"{'period':>8} {'res':>5} {'kernel':>8} {'python s':>10} {'compiled s':>11} {'speedup':>8}"
    print(header)
    for (p, q), res in CASES:
        a, b = operands(p, q, res)
        energy = -0.01
        kernels = {
            "extrema": lambda impl: impl.separable_band_extrema(a, b),
            "counts": lambda impl: impl.separable_count_grid(a, b, energy),
        }
        for name, call in kernels.items():
            t_py = best_of(lambda: call(_kernels_py), args.repeat)
            t_c = None
            if compiled is not None:
                t_c = best_of(lambda: call(compiled), args.repeat)
                for x, y in zip(call(compiled), call(_kernels_py)):
                    if not np.array_equal(x, y):
                        raise SystemExit(f"backends disagree on {name} for {p}x{q} at {res}")
            speed = f"{t_py / t_c:8.1f}" if t_c else "     n/a"
            t_c_txt = f"{t_c:11.4f}" if t_c else "        n/a"
            print(f"{p:>4}x{q:<3} {res:>5} {name:>8} {t_py:10.4f} {t_c_txt} {speed}")
            rows.append({"period": [p, q], "resolution": res, "kernel": name, "python_s": t_py, "compiled_s": t_c})
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
