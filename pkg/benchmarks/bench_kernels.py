"""Compare the compiled and pure-Python loop-function kernels.

Usage: python3 benchmarks/bench_kernels.py [--n 20000] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from hadronpoles import _kernels_py
from hadronpoles import kernels


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000, help="points per call")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    s = rng.uniform(-2e5, 3e6, args.n) + 1j * rng.uniform(-5e5, 5e5, args.n)
    m1, m2 = 139.57, 493.68

    try:
        from hadronpoles import _kernels as compiled
    except ImportError:
        compiled = None
    print(f"selected backend: {kernels.BACKEND}")

    rows = [("python", _kernels_py)]
    if compiled is not None:
        rows.append(("cython", compiled))
        diff = np.max(np.abs(compiled.loop_g_array(s, m1, m2) - _kernels_py.loop_g_array(s, m1, m2)))
        print(f"max |G_cython - G_python| = {diff:.2e}")
    else:
        print("compiled extension not built; timing the fallback only")

    base = None
    for name, mod in rows:
        for fn in ("loop_g_array", "loop_dg_array"):
            f = getattr(mod, fn)
            t = min(timeit.repeat(lambda: f(s, m1, m2), number=1, repeat=args.repeat))
            if fn == "loop_g_array" and name == "python":
                base = t
            rate = args.n / t / 1e6
            extra = f"  x{base / t:.1f}" if fn == "loop_g_array" and base else ""
            print(f"{name:7s} {fn:14s} {t * 1e3:9.2f} ms  {rate:7.2f} Mpts/s{extra}")


if __name__ == "__main__":
    main()
