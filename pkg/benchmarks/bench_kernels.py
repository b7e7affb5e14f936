"""Compare the compiled sweep kernels with the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5]

Each workload is a full solve, timed with both backends; the table lists the
best wall time of ``--repeat`` runs and the speed-up of the compiled path.
"""

import argparse
import contextlib
import timeit

import numpy as np

from romsn import _fallback, kernels
from romsn.analysis import NeumannConfig, neumann_phi_slab
from romsn.problem import benchmark_center_source, benchmark_slab_case
from romsn.quadrature import uniform_slab, uniform_xy
from romsn.slab import source_iteration_slab
from romsn.xy import source_iteration_xy

KERNELS = ("slab_sweep_dd", "slab_sweep_lc", "dd_sweep", "linear_recurrence")


@contextlib.contextmanager
def backend(impl):
    saved = {name: getattr(kernels, name) for name in KERNELS}
    try:
        for name in KERNELS:
            setattr(kernels, name, getattr(impl, name))
        yield
    finally:
        for name, fn in saved.items():
            setattr(kernels, name, fn)


def workloads():
    case1 = benchmark_slab_case(1)
    center = benchmark_center_source()
    center_aniso = benchmark_center_source(0.9)
    return {
        "slab LC, M=80, I=50": lambda: source_iteration_slab(case1, uniform_slab(80), 50),
        "slab DD, M=80, I=50": lambda: source_iteration_slab(case1, uniform_slab(80), 50, scheme="diamond"),
        "X-Y DD, N=2, 100x100": lambda: source_iteration_xy(center, uniform_xy(2), 100),
        "X-Y DD g=0.9, N=2, 50x50": lambda: source_iteration_xy(center_aniso, uniform_xy(2), 50),
        "oracle, 4096 panels": lambda: neumann_phi_slab(case1, NeumannConfig()),
    }


def best_time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    try:
        from romsn import _sweeps
    except ImportError:
        parser.exit(1, "compiled extension not built; run `pip install -e . --no-build-isolation`\n")

    print(f"{'workload':<28}{'cython [s]':>12}{'python [s]':>12}{'speed-up':>10}")
    for name, fn in workloads().items():
        with backend(_sweeps):
            fast = best_time(fn, args.repeat)
            ref = fn()[1] if not name.startswith("oracle") else fn().phi
        with backend(_fallback):
            slow = best_time(fn, max(1, args.repeat // 2))
            other = fn()[1] if not name.startswith("oracle") else fn().phi
        agree = np.max(np.abs(ref - other))
        print(f"{name:<28}{fast:>12.4f}{slow:>12.4f}{slow / fast:>9.1f}x   max diff {agree:.1e}")


if __name__ == "__main__":
    main()
