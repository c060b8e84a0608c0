"""Random network generation and influence-matrix construction.

Graphs come from a two-parameter stochastic block model; influence matrices
are obtained by row-normalizing (weighted) adjacency matrices, with rows kept
as exact rationals so downstream constraint encodings never round.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dynamics import BlockStructure, DimensionMismatchError, InfluenceMatrix, as_fraction, spectral_norm


def split_communities(n: int, k: int = 2) -> tuple[tuple[int, ...], ...]:
    """Partition agents 0..n-1 into k contiguous groups, first groups larger."""
    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    out, start = [], 0
    for s in sizes:
        out.append(tuple(range(start, start + s)))
        start += s
    return tuple(out)


@dataclass(frozen=True)
class SbmParams:
    n: int
    p_in: float
    p_out: float
    seed: int
    communities: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        if self.communities is None:
            object.__setattr__(self, "communities", split_communities(self.n))
        members = sorted(i for c in self.communities for i in c)
        if members != list(range(self.n)):
            raise ValueError("communities must partition the agent set")
        for p in (self.p_in, self.p_out):
            if not 0 <= p <= 1:
                raise ValueError("edge probabilities must lie in [0, 1]")

    def labels(self) -> np.ndarray:
        lab = np.empty(self.n, dtype=int)
        for c, mem in enumerate(self.communities):
            lab[list(mem)] = c
        return lab


@dataclass(frozen=True)
class Adjacency:
    """Nonnegative (possibly weighted) adjacency matrix."""

    a: np.ndarray
    self_loop_policy: str = "strict"  # or "add-unit-self-loop"
    block: BlockStructure | None = None

    def __post_init__(self):
        m = np.asarray(self.a, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "a", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("adjacency must be square")
        if np.any(m < 0):
            raise ValueError("adjacency entries must be nonnegative")
        if self.self_loop_policy not in ("strict", "add-unit-self-loop"):
            raise ValueError(f"unknown self-loop policy {self.self_loop_policy!r}")

    @property
    def n(self) -> int:
        return self.a.shape[0]


class ZeroRowError(ValueError):
    def __init__(self, agent: int):
        super().__init__(f"agent {agent} has no influence sources (zero adjacency row); "
                         "use the add-unit-self-loop policy or adjust the graph")
        self.agent = agent


def sbm_generate(params: SbmParams) -> Adjacency:
    """Sample a symmetric 0/1 graph; same-community pairs use p_in.

    Deterministic per seed. The diagonal stays zero (no self-influence).
    """
    rng = np.random.default_rng(params.seed)
    lab = params.labels()
    n = params.n
    u = rng.random((n, n))
    prob = np.where(lab[:, None] == lab[None, :], params.p_in, params.p_out)
    upper = np.triu(u < prob, k=1)
    a = (upper | upper.T).astype(float)
    return Adjacency(a=a)


def expected_adjacency(params: SbmParams) -> Adjacency:
    """Entrywise edge probabilities: p_in within blocks, p_out across."""
    lab = params.labels()
    a = np.where(lab[:, None] == lab[None, :], params.p_in, params.p_out)
    np.fill_diagonal(a, 0.0)
    k = len(params.communities)
    vals = tuple(
        tuple(as_fraction(params.p_in if i == j else params.p_out) for j in range(k))
        for i in range(k)
    )
    return Adjacency(a=a, block=BlockStructure(communities=params.communities, values=vals))


def block_weighted_adjacency(
    n: int,
    w_in,
    w_out,
    communities: tuple[tuple[int, ...], ...] | None = None,
) -> Adjacency:
    """Dense weighted graph: w_in within a community, w_out across, 0 diagonal."""
    if communities is None:
        communities = split_communities(n)
    lab = np.empty(n, dtype=int)
    for c, mem in enumerate(communities):
        lab[list(mem)] = c
    a = np.where(lab[:, None] == lab[None, :], float(w_in), float(w_out))
    np.fill_diagonal(a, 0.0)
    k = len(communities)
    vals = tuple(
        tuple(as_fraction(w_in if i == j else w_out) for j in range(k)) for i in range(k)
    )
    return Adjacency(a=a, block=BlockStructure(communities=communities, values=vals))


def row_normalize(adj: Adjacency) -> InfluenceMatrix:
    """Stochastic matrix with exact rational entries a_ij / sum_k a_ik.

    A zero row raises under the strict policy; the add-unit-self-loop policy
    gives such an agent a unit self-loop before normalizing.
    """
    n = adj.n
    rows = []
    row_sums = []
    for i in range(n):
        row = [as_fraction(v) for v in adj.a[i]]
        s = sum(row)
        if s == 0:
            if adj.self_loop_policy == "add-unit-self-loop":
                row[i] = Fraction(1)
                s = Fraction(1)
            else:
                raise ZeroRowError(i)
        rows.append(tuple(e / s for e in row))
        row_sums.append(s)
    block = None
    if adj.block is not None and len(set(row_sums)) >= 1:
        # block-constant weights survive normalization only when every row in
        # a community has the same sum; with a common w_in/w_out pattern the
        # sum depends only on the community, so check per community.
        comm = adj.block.community_of(n)
        per_comm_sum = {}
        ok = True
        for i in range(n):
            c = comm[i]
            if c in per_comm_sum and per_comm_sum[c] != row_sums[i]:
                ok = False
                break
            per_comm_sum[c] = row_sums[i]
        if ok:
            k = adj.block.k
            vals = tuple(
                tuple(adj.block.values[a][b] / per_comm_sum[a] for b in range(k))
                for a in range(k)
            )
            block = BlockStructure(communities=adj.block.communities, values=vals)
    return InfluenceMatrix(exact=tuple(rows), block=block)


def weight_error(w: InfluenceMatrix, w_ab: InfluenceMatrix) -> float:
    """Spectral norm of the difference between two influence matrices."""
    if w.n != w_ab.n:
        raise DimensionMismatchError("matrices differ in size")
    return spectral_norm(w.values - w_ab.values)
