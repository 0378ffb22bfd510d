"""Compare the compiled and pure-Python graph kernels.

Usage::

    python3 benchmarks/bench_kernels.py [--n 200] [--k 5] [--graphs 5] [--repeat 3]

Times maximum matching, betweenness, and a full TDA structural curve on
ER and SF graphs with each available backend, and prints the median wall
time per call together with the speed-up of the compiled kernels.
"""
from __future__ import annotations

import argparse
import contextlib
import statistics
import time

import numpy as np

from ctrlrob import kernels
from ctrlrob.attack import sample_rng, simulate_curve
from ctrlrob.netgen import GenSpec, generate


@contextlib.contextmanager
def use_backend(name):
    impl = kernels.get_backend(name)
    saved = kernels.max_matching, kernels.betweenness
    kernels.max_matching, kernels.betweenness = impl.max_matching, impl.betweenness
    try:
        yield impl
    finally:
        kernels.max_matching, kernels.betweenness = saved


def _median_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def run(n=200, k=5.0, graphs=5, repeat=3):
    """Return ``{(task, topology): {backend: seconds}}`` of median timings."""
    results = {}
    for topo in ("er", "sf"):
        gs = [generate(GenSpec(topo, n, k, seed=s)) for s in range(graphs)]
        csr = [g.csr() for g in gs]
        for name in kernels.BACKENDS:
            with use_backend(name) as impl:
                tasks = {
                    "matching": lambda: [impl.max_matching(n, p, i) for p, i in csr],
                    "betweenness": lambda: [impl.betweenness(n, p, i) for p, i in csr],
                    "tda curve": lambda: [simulate_curve(g, "tda", rng=sample_rng(0, j)) for j, g in enumerate(gs)],
                }
                for task, fn in tasks.items():
                    reps = 1 if task == "tda curve" else repeat
                    results.setdefault((task, topo), {})[name] = _median_time(fn, reps) / graphs
    return results


def check_agreement(n=200, k=5.0, graphs=5):
    """Both backends must return identical matchings and near-identical betweenness."""
    if len(kernels.BACKENDS) < 2:
        return
    py, cy = kernels.get_backend("python"), kernels.get_backend("cython")
    for s in range(graphs):
        p, i = generate(GenSpec("sf", n, k, seed=s)).csr()
        assert py.max_matching(n, p, i) == cy.max_matching(n, p, i)
        np.testing.assert_allclose(py.betweenness(n, p, i), cy.betweenness(n, p, i), rtol=0, atol=1e-9)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--k", type=float, default=5.0)
    ap.add_argument("--graphs", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args(argv)
    check_agreement(a.n, a.k, a.graphs)
    res = run(a.n, a.k, a.graphs, a.repeat)
    names = list(kernels.BACKENDS)
    print(f"N={a.n} <k>={a.k:g}, {a.graphs} graphs, default backend: {kernels.BACKEND}")
    print(f"{'task':<12} {'topo':<5}" + "".join(f"{n + ' ms':>14}" for n in names) + f"{'speed-up':>10}")
    for (task, topo), row in res.items():
        cells = "".join(f"{1e3 * row[n]:>14.3f}" for n in names)
        ratio = row["python"] / row["cython"] if "cython" in row else float("nan")
        print(f"{task:<12} {topo:<5}{cells}{ratio:>9.1f}x")


if __name__ == "__main__":
    main()
