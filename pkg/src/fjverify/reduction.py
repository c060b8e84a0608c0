"""Structural reduction: collapse known stubborn agents into group states.

A totally stubborn agent (stubbornness exactly 1) never moves, so when its
initial opinion is known it contributes a constant to its neighbours'
updates. With block-constant influence weights, stubborn agents sharing a
community and an initial value are interchangeable: one representative state
per (community, initial value) group, weighted by the group cardinality,
reproduces every free agent's trajectory exactly while shrinking the system
dimension from n to (#free + #groups).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .abstraction import AbstractGrid, ModelConfig
from .dynamics import InfluenceMatrix, StubbornnessVector, as_fraction

_GRID_MATCH_TOL = 1e-12


@dataclass(frozen=True)
class StubbornGroup:
    community: int
    init_index: int
    value: Fraction
    members: tuple[int, ...]


@dataclass(frozen=True)
class GroupReduction:
    free: tuple[int, ...]
    groups: tuple[StubbornGroup, ...]
    grid: AbstractGrid

    @property
    def stubborn(self) -> tuple[int, ...]:
        return tuple(sorted(i for g in self.groups for i in g.members))

    @property
    def reduced_dim(self) -> int:
        return len(self.free) + len(self.groups)


def _grid_index_of(value: float, grid: AbstractGrid) -> int:
    for k, g in enumerate(grid.grid_values()):
        if abs(value - float(g)) <= _GRID_MATCH_TOL:
            return k
    raise ValueError(f"stubborn initial opinion {value} is not a grid value")


def group_reduce(
    config: ModelConfig,
    grid: AbstractGrid,
    gamma: float = 0.5,
) -> tuple[GroupReduction, ModelConfig]:
    """Build the reduction and the reduced model for a concrete configuration.

    Requires block-constant influence weights (the matrix must carry its
    block structure) and stubborn initial opinions lying on the grid. The
    reduced model orders free agents first (original order), then one
    representative per group.
    """
    w = config.w
    if w.block is None:
        raise ValueError("group reduction needs block-constant influence weights")
    comm = w.block.community_of(config.n)
    lam = config.lam.values
    stubborn = [i for i in range(config.n) if lam[i] == 1.0]
    free = tuple(i for i in range(config.n) if lam[i] != 1.0)

    buckets: dict[tuple[int, int], list[int]] = {}
    for i in stubborn:
        key = (int(comm[i]), _grid_index_of(config.x_init[i], grid))
        buckets.setdefault(key, []).append(i)
    groups = tuple(
        StubbornGroup(community=c, init_index=k,
                      value=grid.grid_values()[k], members=tuple(sorted(mem)))
        for (c, k), mem in sorted(buckets.items())
    )
    reduction = GroupReduction(free=free, groups=groups, grid=grid)

    # reduced weight matrix over free agents then groups
    vals = w.block.values
    m = reduction.reduced_dim
    rows: list[list[Fraction]] = []
    order = list(free) + [g.members[0] for g in groups]  # representatives
    for a, i in enumerate(order):
        row = [Fraction(0)] * m
        ci = int(comm[i])
        for b, j in enumerate(free):
            if i != j:
                row[b] = vals[ci][int(comm[j])]
        for b, g in enumerate(groups):
            weight = vals[ci][g.community] * len(g.members)
            if i in g.members:
                weight -= vals[ci][g.community]  # no self-influence
            row[len(free) + b] = weight
        rows.append(row)
    w_red = InfluenceMatrix(exact=tuple(tuple(r) for r in rows))

    x0_red = np.concatenate([
        config.x_init[list(free)] if free else np.empty(0),
        np.array([float(g.value) for g in groups]),
    ])
    lam_red = np.concatenate([
        lam[list(free)] if free else np.empty(0),
        np.ones(len(groups)),
    ])
    reduced = ModelConfig(x_init=x0_red, lam=StubbornnessVector(lam_red), w=w_red)
    return reduction, reduced


def stubborn_output_bits(reduction: GroupReduction, gamma) -> dict[int, int]:
    """Constant output bit of every stubborn agent."""
    gq = as_fraction(gamma)
    bits: dict[int, int] = {}
    for g in reduction.groups:
        bit = 1 if g.value >= gq else 0
        for i in g.members:
            bits[i] = bit
    return bits
