"""Node-removal attacks and controllability-curve simulation.

An attack removes one node at a time until a single node is left.  After
removal ``i`` the driver-node density of the remaining ``N - i`` nodes is
recorded, giving a curve of ``N - 1`` values whose last entry is 1.

Targeted attacks recompute betweenness or total degree on the current graph
before every removal and break ties uniformly at random.
"""
from __future__ import annotations

import enum
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .control import DEFAULT_RANK_TOL, ControllabilityKind, driver_count
from .graph import DirectedGraph, degrees, remove_node
from .netgen import GenSpec, generate

# relative slack when collecting betweenness maximizers (float path sums)
TIE_RTOL = 1e-9


class AttackStrategy(str, enum.Enum):
    RA = "ra"
    TBA = "tba"
    TDA = "tda"


@dataclass
class ControllabilityCurve:
    values: np.ndarray
    kind: ControllabilityKind = ControllabilityKind.STRUCTURAL
    strategy: AttackStrategy = AttackStrategy.RA

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.kind = ControllabilityKind(self.kind)
        self.strategy = AttackStrategy(self.strategy)

    def __len__(self):
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[0] + 1

    def __eq__(self, other):
        if not isinstance(other, ControllabilityCurve):
            return NotImplemented
        return self.kind == other.kind and self.strategy == other.strategy and np.array_equal(self.values, other.values)


def betweenness(g: DirectedGraph) -> np.ndarray:
    """Directed betweenness over unweighted shortest paths; endpoints excluded."""
    if g.edge_count == 0:
        return np.zeros(g.node_count)
    indptr, indices = g.csr()
    return np.asarray(kernels.betweenness(g.node_count, indptr, indices))


def _argmax_set(scores, rtol=0.0):
    top = scores.max()
    return np.flatnonzero(scores >= top - rtol * max(1.0, abs(top)))


def select_target(g: DirectedGraph, strategy, rng: np.random.Generator) -> int:
    strategy = AttackStrategy(strategy)
    if g.node_count < 2:
        raise ValueError("attack target selection needs at least two nodes")
    if strategy is AttackStrategy.RA:
        return int(rng.integers(g.node_count))
    if strategy is AttackStrategy.TDA:
        cands = _argmax_set(degrees(g)[2])
    else:
        cands = _argmax_set(betweenness(g), TIE_RTOL)
    if cands.size == 1:
        return int(cands[0])
    return int(cands[rng.integers(cands.size)])


def simulate_curve(
    g: DirectedGraph,
    strategy=AttackStrategy.RA,
    kind=ControllabilityKind.STRUCTURAL,
    tol: float = DEFAULT_RANK_TOL,
    rng: np.random.Generator | None = None,
) -> ControllabilityCurve:
    if g.node_count < 2:
        raise ValueError("a controllability curve needs at least two nodes")
    rng = np.random.default_rng() if rng is None else rng
    n = g.node_count
    values = np.empty(n - 1)
    cur = g
    for i in range(1, n):
        cur = remove_node(cur, select_target(cur, strategy, rng))
        values[i - 1] = driver_count(cur, kind, tol).density
    return ControllabilityCurve(values, kind, strategy)


def sample_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent attack stream for sample ``index`` under ``master_seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed) & (2**64 - 1), int(index)]))


@dataclass
class SimResult:
    index: int
    spec: GenSpec
    graph: DirectedGraph | None = None
    curve: ControllabilityCurve | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _run_one(args):
    index, spec, seed, strategy, kind, tol = args
    try:
        g = generate(spec)
        curve = simulate_curve(g, strategy, kind, tol, np.random.default_rng(seed))
    except Exception as exc:  # collected per sample, the batch keeps going
        return SimResult(index, spec, error=f"{type(exc).__name__}: {exc}")
    return SimResult(index, spec, g, curve)


def default_workers() -> int:
    env = os.environ.get("CTRLROB_WORKERS")
    if env:
        return max(1, int(env))
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


def batch_simulate(
    specs,
    strategy=AttackStrategy.RA,
    kind=ControllabilityKind.STRUCTURAL,
    seeds=None,
    worker_count: int | None = None,
    tol: float = DEFAULT_RANK_TOL,
) -> list[SimResult]:
    """Generate and attack every spec; results come back in input order.

    ``seeds[i]`` seeds the attack stream of sample ``i`` (an int or a
    ``SeedSequence``).  The output does not depend on ``worker_count``.
    """
    specs = list(specs)
    if seeds is None:
        seeds = [np.random.SeedSequence([0, i]) for i in range(len(specs))]
    seeds = list(seeds)
    if len(seeds) != len(specs):
        raise ValueError(f"{len(specs)} specs but {len(seeds)} seeds")
    plain = [s for s in seeds if not isinstance(s, np.random.SeedSequence)]
    if len(set(plain)) != len(plain):
        raise ValueError("attack seeds must be distinct per sample")
    strategy = AttackStrategy(strategy)
    kind = ControllabilityKind(kind)
    jobs = [(i, spec, seed, strategy, kind, tol) for i, (spec, seed) in enumerate(zip(specs, seeds))]
    workers = default_workers() if worker_count is None else max(1, int(worker_count))
    if workers == 1 or len(jobs) <= 1:
        return [_run_one(j) for j in jobs]
    chunk = max(1, len(jobs) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, jobs, chunksize=chunk))


def write_curves_csv(rows, path) -> None:
    """Write ``sample_id, v1, ..., v_{N-1}`` rows; ``rows`` yields ``(id, values)``."""
    lines = []
    for sample_id, values in rows:
        lines.append(",".join([str(sample_id)] + [repr(float(v)) for v in values]))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_curves_csv(path) -> list[tuple[str, np.ndarray]]:
    out = []
    for line in Path(path).read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split(",")
        out.append((parts[0].strip(), np.array([float(p) for p in parts[1:]])))
    return out
