"""Directed graphs with dense integer node ids.

A :class:`DirectedGraph` is an immutable value.  Edges are kept as three
parallel numpy arrays sorted by ``(src, dst)``, which makes node removal,
degree counting and CSR construction vectorised one-liners.
"""
from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class GraphError(ValueError):
    """Raised when edges or node ids violate the graph invariants."""


class DirectedGraph:
    """Simple directed graph on nodes ``0..n-1``.

    No self-loops, no parallel edges, and every weight lies in (0, 1].
    Unweighted graphs store weight 1.0 exactly.

    Use :func:`from_edge_list` to build one from Python tuples.
    """

    __slots__ = ("_n", "_src", "_dst", "_weight", "weighted")

    def __init__(self, n, src, dst, weight=None, *, weighted=None, check=True):
        n = int(n)
        src = np.asarray(src, dtype=np.int64).reshape(-1)
        dst = np.asarray(dst, dtype=np.int64).reshape(-1)
        if weight is None:
            weight = np.ones(src.shape[0], dtype=np.float64)
        else:
            weight = np.asarray(weight, dtype=np.float64).reshape(-1)
        if check:
            _validate(n, src, dst, weight)
            order = np.lexsort((dst, src))
            src, dst, weight = src[order], dst[order], weight[order]
        for arr in (src, dst, weight):
            arr.flags.writeable = False
        self._n = n
        self._src = src
        self._dst = dst
        self._weight = weight
        if weighted is None:
            weighted = bool(np.any(weight != 1.0))
        self.weighted = bool(weighted)

    @property
    def node_count(self) -> int:
        return self._n

    @property
    def edge_count(self) -> int:
        return int(self._src.shape[0])

    @property
    def src(self) -> np.ndarray:
        return self._src

    @property
    def dst(self) -> np.ndarray:
        return self._dst

    @property
    def weight(self) -> np.ndarray:
        return self._weight

    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(s), int(d), float(w)) for s, d, w in zip(self._src, self._dst, self._weight)]

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Out-adjacency in CSR form: ``(indptr, indices)``."""
        counts = np.bincount(self._src, minlength=self._n)
        indptr = np.zeros(self._n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return indptr, np.ascontiguousarray(self._dst)

    def with_weights(self, weight) -> "DirectedGraph":
        return DirectedGraph(self._n, self._src, self._dst, weight)

    def __eq__(self, other):
        if not isinstance(other, DirectedGraph):
            return NotImplemented
        return (
            self._n == other._n
            and np.array_equal(self._src, other._src)
            and np.array_equal(self._dst, other._dst)
            and np.array_equal(self._weight, other._weight)
        )

    def __hash__(self):
        return hash((self._n, self._src.tobytes(), self._dst.tobytes(), self._weight.tobytes()))

    def __repr__(self):
        kind = "weighted" if self.weighted else "unweighted"
        return f"DirectedGraph(n={self._n}, m={self.edge_count}, {kind})"

    def __getstate__(self):
        return (self._n, self._src, self._dst, self._weight, self.weighted)

    def __setstate__(self, state):
        n, src, dst, weight, weighted = state
        self.__init__(n, src, dst, weight, weighted=weighted, check=False)


def _validate(n, src, dst, weight):
    if n < 1:
        raise GraphError(f"node count must be >= 1, got {n}")
    if not (src.shape == dst.shape == weight.shape):
        raise GraphError("src, dst and weight arrays must have equal length")
    if src.size:
        if src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n:
            raise GraphError(f"edge endpoint out of range [0, {n})")
        loops = np.flatnonzero(src == dst)
        if loops.size:
            v = int(src[loops[0]])
            raise GraphError(f"self-loop at node {v}")
        codes = src * n + dst
        uniq, counts = np.unique(codes, return_counts=True)
        if np.any(counts > 1):
            c = int(uniq[np.argmax(counts > 1)])
            raise GraphError(f"duplicate edge {c // n}->{c % n}")
        if not np.all(np.isfinite(weight)) or np.any(weight <= 0.0) or np.any(weight > 1.0):
            raise GraphError("edge weights must lie in (0, 1]")


def from_edge_list(n: int, edges: Iterable[Sequence]) -> DirectedGraph:
    """Build a graph from ``(src, dst)`` or ``(src, dst, weight)`` tuples.

    >>> from_edge_list(3, [(0, 1, 1), (1, 2, 1)])
    DirectedGraph(n=3, m=2, unweighted)
    """
    edges = list(edges)
    src = [int(e[0]) for e in edges]
    dst = [int(e[1]) for e in edges]
    weight = [float(e[2]) if len(e) > 2 else 1.0 for e in edges]
    return DirectedGraph(n, src, dst, weight)


def to_matrix(g: DirectedGraph) -> np.ndarray:
    """Dense ``n x n`` adjacency matrix; entry ``(i, j)`` is the weight of ``i -> j``."""
    m = np.zeros((g.node_count, g.node_count), dtype=np.float64)
    m[g.src, g.dst] = g.weight
    return m


def from_matrix(m) -> DirectedGraph:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise GraphError(f"adjacency matrix must be square, got shape {m.shape}")
    src, dst = np.nonzero(m)
    return DirectedGraph(m.shape[0], src, dst, m[src, dst])


def remove_node(g: DirectedGraph, v: int) -> DirectedGraph:
    """Delete node ``v`` and its incident edges; ids above ``v`` shift down by one."""
    v = int(v)
    if not 0 <= v < g.node_count:
        raise GraphError(f"node {v} out of range [0, {g.node_count})")
    if g.node_count == 1:
        raise GraphError("cannot remove the only node of a graph")
    keep = (g.src != v) & (g.dst != v)
    src = g.src[keep]
    dst = g.dst[keep]
    src = src - (src > v)
    dst = dst - (dst > v)
    # relabelling is monotone, so the (src, dst) sort order survives
    return DirectedGraph(g.node_count - 1, src, dst, g.weight[keep], weighted=g.weighted, check=False)


def degrees(g: DirectedGraph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-node ``(in, out, total)`` degree arrays."""
    indeg = np.bincount(g.dst, minlength=g.node_count)
    outdeg = np.bincount(g.src, minlength=g.node_count)
    return indeg, outdeg, indeg + outdeg


def write_edge_list(g: DirectedGraph, path) -> None:
    """Write the ``N M`` header followed by one ``src dst [weight]`` line per edge."""
    lines = [f"{g.node_count} {g.edge_count}"]
    if g.weighted:
        lines.extend(f"{s} {d} {w!r}" for s, d, w in zip(g.src.tolist(), g.dst.tolist(), g.weight.tolist()))
    else:
        lines.extend(f"{s} {d}" for s, d in zip(g.src.tolist(), g.dst.tolist()))
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path) -> DirectedGraph:
    text = Path(path).read_text()
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or len(rows[0]) != 2:
        raise GraphError(f"{path}: first line must be 'N M'")
    try:
        n, m = int(rows[0][0]), int(rows[0][1])
    except ValueError as exc:
        raise GraphError(f"{path}: bad header {rows[0]}") from exc
    body = rows[1:]
    if len(body) != m:
        raise GraphError(f"{path}: header declares {m} edges, found {len(body)}")
    edges = []
    for k, row in enumerate(body, start=2):
        if len(row) not in (2, 3):
            raise GraphError(f"{path}:{k}: expected 'src dst [weight]'")
        try:
            edges.append((int(row[0]), int(row[1]), float(row[2]) if len(row) == 3 else 1.0))
        except ValueError as exc:
            raise GraphError(f"{path}:{k}: {exc}") from exc
    g = from_edge_list(n, edges)
    if any(len(r) == 3 for r in body):
        g = DirectedGraph(n, g.src, g.dst, g.weight, weighted=True, check=False)
    return g
