"""Compare the compiled and NumPy kernel backends.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Times the two hot paths: outcome probabilities over a full 72 x 72 angle
grid (the inner loop of CHSH maximization) and inverse-CDF sampling of
10^6 shots (one Monte Carlo setting).
"""

import argparse
import timeit

import numpy as np

from modebell import _kernels_py
from modebell.analytic import mixed_family
from modebell.protocol import Experiment, angle_grid

try:
    from modebell import _kernels as _compiled
except ImportError:
    _compiled = None


def workloads():
    exp = Experiment(mixed_family(0.3))
    g = angle_grid(72)
    ta, tb = (a.ravel() for a in np.meshgrid(g, g, indexing="ij"))
    weights = np.array([w for w, _ in exp.prep.branches()], dtype=float)
    probs = exp.probabilities(0.3, 1.1)[0]
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    uniforms = np.random.default_rng(0).random(10**6)
    return {
        "angle grid 72x72": lambda impl: impl.outcome_probabilities(exp.coef, weights, ta, tb),
        "sample 1e6 shots": lambda impl: impl.inverse_cdf_counts(cdf, uniforms),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = {"python": _kernels_py}
    if _compiled is not None:
        backends["cython"] = _compiled
    else:
        print("compiled extension not built; timing the NumPy fallback only")

    print(f"{'workload':<20}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    for label, fn in workloads().items():
        times = {}
        for name, impl in backends.items():
            fn(impl)  # warm up
            times[name] = min(timeit.repeat(lambda: fn(impl), number=1, repeat=args.repeat))
        row = f"{label:<20}" + "".join(f"{times[n] * 1e3:>10.2f}ms" for n in backends)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
