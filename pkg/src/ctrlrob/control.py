"""Driver-node counts for structural and state controllability.

Structural: ``N_D = max(1, N - |E*|)`` with ``|E*|`` a maximum matching.
State (rank shortcut): ``N_D = max(1, N - rank(A))``.
The controllability measure is the density ``n_D = N_D / N``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import kernels
from .graph import DirectedGraph, to_matrix

DEFAULT_RANK_TOL = 1e-10
SPARSE_RATIO = 0.05


class ControllabilityKind(str, enum.Enum):
    STRUCTURAL = "structural"
    STATE = "state"


@dataclass(frozen=True)
class DriverCount:
    count: int
    n: int

    @property
    def density(self) -> float:
        return self.count / self.n


def max_matching_size(g: DirectedGraph) -> int:
    """Cardinality of a maximum matching (edges sharing no start and no end node)."""
    if g.edge_count == 0:
        return 0
    indptr, indices = g.csr()
    return int(kernels.max_matching(g.node_count, indptr, indices))


def structural_nd(g: DirectedGraph) -> DriverCount:
    return DriverCount(max(1, g.node_count - max_matching_size(g)), g.node_count)


def numerical_rank(m, tol: float = DEFAULT_RANK_TOL) -> int:
    """Number of singular values above ``tol`` times the largest one."""
    if not tol > 0:
        raise ValueError(f"rank tolerance must be positive, got {tol}")
    m = np.asarray(m, dtype=np.float64)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    if m.size == 0 or not np.any(m):
        return 0
    sv = np.linalg.svd(m, compute_uv=False)
    return int(np.count_nonzero(sv > tol * sv[0]))


def state_nd(m, tol: float = DEFAULT_RANK_TOL) -> DriverCount:
    m = np.asarray(m, dtype=np.float64)
    n = m.shape[0]
    return DriverCount(max(1, n - numerical_rank(m, tol)), n)


def driver_count(g: DirectedGraph, kind=ControllabilityKind.STRUCTURAL, tol: float = DEFAULT_RANK_TOL) -> DriverCount:
    kind = ControllabilityKind(kind)
    if kind is ControllabilityKind.STRUCTURAL:
        return structural_nd(g)
    return state_nd(to_matrix(g), tol)


def max_edges(n: int) -> float:
    # N(N-1)/2 as printed for directed networks, even though N(N-1) ordered pairs exist
    return n * (n - 1) / 2


def sparsity_check(g: DirectedGraph) -> bool:
    """True when ``M / (N(N-1)/2) <= 0.05``; advisory only."""
    if g.node_count < 2:
        raise ValueError("sparsity is undefined for a single node")
    return g.edge_count / max_edges(g.node_count) <= SPARSE_RATIO
