import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ctrlrob import kernels  # noqa: E402


@pytest.fixture(params=sorted(kernels.BACKENDS))
def backend(request, monkeypatch):
    """Run a test once per available kernel backend."""
    impl = kernels.get_backend(request.param)
    monkeypatch.setattr(kernels, "max_matching", impl.max_matching)
    monkeypatch.setattr(kernels, "betweenness", impl.betweenness)
    return request.param


@pytest.fixture(scope="session")
def toy_dataset(tmp_path_factory):
    """40 samples at N=16 (32 train, 4 validation, 4 test)."""
    from ctrlrob.dataset import build_dataset, grid

    out = tmp_path_factory.mktemp("toy")
    return build_dataset(grid(16, degrees=(3,), count=10), "ra", "structural", 5, out, worker_count=1)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
