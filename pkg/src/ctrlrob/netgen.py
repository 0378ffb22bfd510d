"""Seeded generators for directed ER, SF, QSN and SW networks.

Every generator is a pure function of its :class:`GenSpec`; the GenSpec seed
drives a private ``numpy.random.Generator`` stream, so repeated calls return
identical graphs.  The average degree is read as average out-degree, so the
target edge count is ``M = round(avg_degree * n)``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np

from .graph import DirectedGraph

TOPOLOGIES = ("er", "sf", "qsn", "sw")

SF_MAX_ATTEMPTS_FACTOR = 50


class GenerationError(ValueError):
    pass


@dataclass(frozen=True)
class GenSpec:
    topology: str
    n: int
    avg_degree: float
    weighted: bool = False
    seed: int = 0
    sf_sigma: float = 0.999
    sf_theta: float = 1.0
    qsn_rq: int = 1
    sw_K: int = 2

    def __post_init__(self):
        topo = str(self.topology).lower()
        object.__setattr__(self, "topology", topo)
        if topo not in TOPOLOGIES:
            raise GenerationError(f"unknown topology {self.topology!r}; expected one of {TOPOLOGIES}")
        if self.n < 2:
            raise GenerationError(f"n must be >= 2, got {self.n}")
        if not self.avg_degree > 0:
            raise GenerationError(f"avg_degree must be positive, got {self.avg_degree}")
        if self.edge_target > self.n * (self.n - 1):
            raise GenerationError(
                f"{self.edge_target} edges requested but only {self.n * (self.n - 1)} directed pairs exist"
            )
        if not 0.0 <= self.sf_sigma < 1.0:
            raise GenerationError(f"sf_sigma must lie in [0, 1), got {self.sf_sigma}")
        if self.sf_theta < 0:
            raise GenerationError(f"sf_theta must be >= 0, got {self.sf_theta}")
        if topo == "qsn" and not 1 <= self.qsn_rq <= self.n - 1:
            raise GenerationError(f"qsn_rq must lie in [1, {self.n - 1}], got {self.qsn_rq}")
        if topo == "sw" and (self.sw_K < 1 or 2 * self.sw_K >= self.n):
            raise GenerationError(f"sw_K must satisfy 1 <= K < n/2, got {self.sw_K}")

    @property
    def edge_target(self) -> int:
        return int(round(self.avg_degree * self.n))

    @property
    def gamma(self) -> float:
        """Power-law exponent 1 + 1/sigma of the SF degree distribution."""
        return float("inf") if self.sf_sigma == 0 else 1.0 + 1.0 / self.sf_sigma

    def with_seed(self, seed: int) -> "GenSpec":
        return replace(self, seed=int(seed))

    def to_dict(self) -> dict:
        return asdict(self)


def _decode_pairs(codes, n):
    # code c enumerates the n*(n-1) ordered pairs without self-loops
    src = codes // (n - 1)
    r = codes % (n - 1)
    dst = r + (r >= src)
    return src, dst


def _encode_pairs(src, dst, n):
    return src * (n - 1) + dst - (dst > src)


def _finish(spec, rng, src, dst):
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    if spec.weighted:
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        # 1 - U[0,1) lies in (0, 1]
        weight = 1.0 - rng.random(src.shape[0])
        return DirectedGraph(spec.n, src, dst, weight, weighted=True)
    return DirectedGraph(spec.n, src, dst, weighted=False)


def _rng(spec):
    return np.random.default_rng(np.random.SeedSequence([int(spec.seed) & (2**64 - 1), TOPOLOGIES.index(spec.topology)]))


def gen_er(spec: GenSpec) -> DirectedGraph:
    """Exactly M distinct directed edges drawn uniformly from all ordered pairs."""
    _expect(spec, "er")
    rng = _rng(spec)
    n, m = spec.n, spec.edge_target
    codes = rng.choice(n * (n - 1), size=m, replace=False)
    src, dst = _decode_pairs(codes, n)
    return _finish(spec, rng, src, dst)


def sf_weights(spec: GenSpec) -> np.ndarray:
    i = np.arange(1, spec.n + 1, dtype=np.float64)
    w = (i + spec.sf_theta) ** (-spec.sf_sigma)
    return w / w.sum()


def gen_sf(spec: GenSpec) -> DirectedGraph:
    """Static-model scale-free graph.

    Source and target are drawn independently with probability proportional
    to ``(i + theta) ** -sigma``; self-loops and already present pairs are
    rejected and redrawn until M edges exist.  Gives up after
    ``50 * M`` draws.
    """
    _expect(spec, "sf")
    rng = _rng(spec)
    n, m = spec.n, spec.edge_target
    p = sf_weights(spec)
    seen = np.zeros(n * n, dtype=bool)
    src_out, dst_out = [], []
    have = 0
    attempts = 0
    budget = SF_MAX_ATTEMPTS_FACTOR * m
    while have < m:
        if attempts >= budget:
            raise GenerationError(f"SF generator placed {have}/{m} edges after {attempts} draws")
        batch = int(min(budget - attempts, max(1024, 2 * (m - have))))
        s = rng.choice(n, size=batch, p=p)
        d = rng.choice(n, size=batch, p=p)
        codes = s * n + d
        ok = (s != d) & ~seen[codes]
        # keep first occurrence of each new pair, in draw order
        cand = np.flatnonzero(ok)
        _, first = np.unique(codes[cand], return_index=True)
        accepted = cand[np.sort(first)]
        if accepted.size > m - have:
            accepted = accepted[: m - have]
            attempts += int(accepted[-1]) + 1
        else:
            attempts += batch
        seen[codes[accepted]] = True
        src_out.append(s[accepted])
        dst_out.append(d[accepted])
        have += accepted.size
    return _finish(spec, rng, np.concatenate(src_out), np.concatenate(dst_out))


def qsn_candidate_count(n: int, rq: int) -> int:
    """Number of possible snapback edges for 1-indexed nodes ``rq+1..n``."""
    i = np.arange(rq + 1, n + 1)
    return int(np.sum((i - 1) // rq))


def qsn_probability(spec: GenSpec) -> float:
    """Snapback probability q that makes the expected edge count equal M."""
    n, m = spec.n, spec.edge_target
    total = qsn_candidate_count(n, spec.qsn_rq)
    extra = m - (n - 1)
    if total == 0:
        return 0.0
    return extra / total


def gen_qsn(spec: GenSpec) -> DirectedGraph:
    """One-layer q-snapback network.

    Backbone chain ``j -> j+1`` plus, for every 1-indexed node ``i > r_q``,
    independent snapback edges ``i -> i - l*r_q`` (``l >= 1``, target
    ``>= 1``), each present with the calibrated probability q.
    """
    _expect(spec, "qsn")
    q = qsn_probability(spec)
    if not 0.0 <= q <= 1.0:
        raise GenerationError(
            f"QSN needs snapback probability {q:.4g} outside [0, 1] for n={spec.n}, avg_degree={spec.avg_degree}"
        )
    rng = _rng(spec)
    n, rq = spec.n, spec.qsn_rq
    chain = np.arange(n - 1, dtype=np.int64)
    i = np.arange(rq + 1, n + 1, dtype=np.int64)
    counts = (i - 1) // rq
    heads = np.repeat(i, counts)
    offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    tails = heads - (offsets + 1) * rq
    keep = rng.random(heads.shape[0]) < q
    src = np.concatenate([chain, heads[keep] - 1])
    dst = np.concatenate([chain + 1, tails[keep] - 1])
    return _finish(spec, rng, src, dst)


def sw_ring(n: int, K: int) -> tuple[np.ndarray, np.ndarray]:
    """Directed ring edges ``j -> j+d (mod n)`` for ``d = 1..K``."""
    j = np.arange(n, dtype=np.int64)
    src = np.concatenate([j] * K)
    dst = np.concatenate([(j + d) % n for d in range(1, K + 1)])
    return src, dst


def gen_sw(spec: GenSpec) -> DirectedGraph:
    """Newman-Watts style small world: directed K-ring plus random extra edges.

    Extra edges are distinct ordered pairs drawn uniformly from those not
    already in the ring; no ring edge is removed.
    """
    _expect(spec, "sw")
    n, m = spec.n, spec.edge_target
    rsrc, rdst = sw_ring(n, spec.sw_K)
    if m < rsrc.shape[0]:
        raise GenerationError(f"SW ring already has {rsrc.shape[0]} edges, more than the requested {m}")
    rng = _rng(spec)
    taken = np.zeros(n * (n - 1), dtype=bool)
    taken[_encode_pairs(rsrc, rdst, n)] = True
    free = np.flatnonzero(~taken)
    extra = rng.choice(free, size=m - rsrc.shape[0], replace=False)
    esrc, edst = _decode_pairs(extra, n)
    return _finish(spec, rng, np.concatenate([rsrc, esrc]), np.concatenate([rdst, edst]))


_GENERATORS = {"er": gen_er, "sf": gen_sf, "qsn": gen_qsn, "sw": gen_sw}


def generate(spec: GenSpec) -> DirectedGraph:
    return _GENERATORS[spec.topology](spec)


def _expect(spec, topology):
    if spec.topology != topology:
        raise GenerationError(f"spec topology is {spec.topology!r}, generator expects {topology!r}")
