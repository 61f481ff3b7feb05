"""Compare the compiled kernels with the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each kernel is run on the same inputs with both backends; the table lists
the best wall time per call and the speedup of the compiled version.
"""
import argparse
import json
import sys
import timeit

import numpy as np

from opde3._backend import get_kernels
from opde3.function_space import _stencils


def cases(rng):
    """(name, callable taking a kernel module) pairs on representative sizes."""
    out = []
    for n in (4, 16, 64):
        m = rng.standard_normal((n, n))
        a = 0.5 * (m + m.T)
        out.append((f"jacobi_eigh n={n}", lambda k, a=a: k.jacobi_eigh(a.copy())))
    for N, n in ((4096, 1), (4096, 8), (8192, 8)):
        v = rng.standard_normal((N, 2 * n))
        center, edge = _stencils(3)
        out.append((f"stencil_apply d3 N={N} n={n}",
                    lambda k, v=v, c=center, e=edge: k.stencil_apply(v, c, e, -1.0, 1e-6)))
        out.append((f"trapezoid_sq N={N} n={n}", lambda k, v=v: k.trapezoid_sq(v, 1e-2)))
        w = rng.standard_normal(v.shape)
        out.append((f"trapezoid_dot N={N} n={n}", lambda k, v=v, w=w: k.trapezoid_dot(v, w, 1e-2)))
    return out


def best_time(fn, repeat):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--json", help="also write the results here")
    args = parser.parse_args(argv)
    py = get_kernels("python")
    try:
        cy = get_kernels("cython")
    except ImportError:
        print("compiled kernels are not built; run pip install -e . first", file=sys.stderr)
        return 1
    rows = []
    for name, fn in cases(np.random.default_rng(args.seed)):
        tp = best_time(lambda: fn(py), args.repeat)
        tc = best_time(lambda: fn(cy), args.repeat)
        rows.append({"kernel": name, "python_s": tp, "cython_s": tc, "speedup": tp / tc})
    width = max(len(r["kernel"]) for r in rows)
    print(f"{'kernel':<{width}}  {'python':>11}  {'cython':>11}  speedup")
    for r in rows:
        print(f"{r['kernel']:<{width}}  {r['python_s'] * 1e6:9.1f}us  {r['cython_s'] * 1e6:9.1f}us"
              f"  {r['speedup']:7.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
