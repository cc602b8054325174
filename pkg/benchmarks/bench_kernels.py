"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from quadsub import _kernels_py, catalog
from quadsub.symbols import hamilton_map

try:
    from quadsub import _kernels as compiled
except ImportError:
    compiled = None


def cases():
    kfp = catalog.kfp()
    F_im = hamilton_map(kfp).F_im
    times = np.linspace(0.0, 0.1, 11)
    x = np.linspace(-25.0, 25.0, 400)
    return {
        "riccati_rk4 kfp, 1000 steps": lambda impl: impl.riccati_rk4(kfp.Q_re, F_im, times,
                                                                     1e-4, 1e6),
        "hermite_functions 400 pts, nmax 300": lambda impl: impl.hermite_functions(x, 300),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    impls = [("python", _kernels_py)]
    if compiled is not None:
        impls.append(("cython", compiled))
    else:
        print("compiled extension not built; timing the fallback only")
    print(f"{'case':40s} {'backend':8s} {'best [ms]':>10s} {'speedup':>8s}")
    for name, fn in cases().items():
        base = None
        for label, impl in impls:
            best = min(timeit.repeat(lambda: fn(impl), number=1, repeat=args.repeat))
            base = base or best
            print(f"{name:40s} {label:8s} {1e3 * best:10.3f} {base / best:8.1f}x")


if __name__ == "__main__":
    main()
