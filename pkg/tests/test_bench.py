import importlib.util
from pathlib import Path

import pytest

from ctrlrob import kernels

_PATH = Path(__file__).resolve().parent.parent / "benchmarks" / "bench_kernels.py"


@pytest.fixture(scope="module")
def bench():
    spec = importlib.util.spec_from_file_location("bench_kernels", _PATH)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def test_backends_agree(bench):
    bench.check_agreement(n=60, k=3, graphs=3)


def test_run_reports_every_backend(bench):
    res = bench.run(n=30, k=3, graphs=1, repeat=1)
    assert set(res) == {(t, g) for t in ("matching", "betweenness", "tda curve") for g in ("er", "sf")}
    for row in res.values():
        assert set(row) == set(kernels.BACKENDS) and all(v > 0 for v in row.values())


def test_use_backend_restores(bench):
    before = kernels.max_matching
    with bench.use_backend("python"):
        assert kernels.max_matching is kernels.get_backend("python").max_matching
    assert kernels.max_matching is before
