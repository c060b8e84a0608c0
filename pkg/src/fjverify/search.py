"""Verification problems over finite families of abstract configurations.

A search space is a product of per-agent option lists: admissible initial
grid indices and admissible stubbornness levels. Spaces are never
materialized wholesale; configurations are addressed by their mixed-radix
linear index (initial-opinion digits first, stubbornness digits last, last
digit fastest).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .abstraction import AbstractConfig, AbstractGrid, ParameterBox, cover_indices
from .dynamics import as_fraction
from .observation import ObservationSpec


class SearchSpaceOverflow(RuntimeError):
    pass


@dataclass(frozen=True)
class SearchSpace:
    init_options: tuple[tuple[int, ...], ...]
    level_options: tuple[tuple[int, ...], ...]
    grid: AbstractGrid

    def __post_init__(self):
        if len(self.init_options) != len(self.level_options):
            raise ValueError("option lists differ in agent count")
        for opts in self.init_options:
            if not opts or any(not 0 <= k < self.grid.d_x for k in opts):
                raise ValueError("bad initial-opinion options")
        for opts in self.level_options:
            if not opts or any(not 0 <= k <= self.grid.d_lambda for k in opts):
                raise ValueError("bad stubbornness options")

    @property
    def n(self) -> int:
        return len(self.init_options)

    def size(self) -> int:
        s = 1
        for opts in self.init_options:
            s *= len(opts)
        for opts in self.level_options:
            s *= len(opts)
        return s

    def radices(self) -> list[int]:
        return [len(o) for o in self.init_options] + [len(o) for o in self.level_options]

    def config_at(self, index: int) -> AbstractConfig:
        """Configuration at a mixed-radix linear index (last digit fastest)."""
        if not 0 <= index < self.size():
            raise IndexError(index)
        digits = []
        for r in reversed(self.radices()):
            digits.append(index % r)
            index //= r
        digits.reverse()
        n = self.n
        init = tuple(self.init_options[i][digits[i]] for i in range(n))
        lev = tuple(self.level_options[i][digits[n + i]] for i in range(n))
        return AbstractConfig(init_indices=init, lambda_levels=lev, grid=self.grid)

    def index_of(self, config: AbstractConfig) -> int:
        index = 0
        for i in range(self.n):
            opts = self.init_options[i]
            index = index * len(opts) + opts.index(config.init_indices[i])
        for i in range(self.n):
            opts = self.level_options[i]
            index = index * len(opts) + opts.index(config.lambda_levels[i])
        return index

    def contains(self, config: AbstractConfig) -> bool:
        return all(k in self.init_options[i] for i, k in enumerate(config.init_indices)) and \
            all(k in self.level_options[i] for i, k in enumerate(config.lambda_levels))

    def restrict_levels(self, allowed: list[list[int]]) -> "SearchSpace":
        """Intersect per-agent stubbornness options with `allowed`."""
        if len(allowed) != self.n:
            raise ValueError("agent count differs")
        new = []
        for opts, extra in zip(self.level_options, allowed):
            kept = tuple(k for k in opts if k in set(extra))
            if not kept:
                raise ValueError("restriction empties an agent's level options")
            new.append(kept)
        return SearchSpace(init_options=self.init_options,
                           level_options=tuple(new), grid=self.grid)

    @classmethod
    def full(cls, grid: AbstractGrid, n: int) -> "SearchSpace":
        return cls(
            init_options=tuple(tuple(range(grid.d_x)) for _ in range(n)),
            level_options=tuple(tuple(range(grid.d_lambda + 1)) for _ in range(n)),
            grid=grid,
        )

    @classmethod
    def from_box(cls, box: ParameterBox, grid: AbstractGrid) -> "SearchSpace":
        """Cover of a configuration box: every grid cell touching it."""
        init_opts, level_opts = cover_indices(box, grid)
        return cls(
            init_options=tuple(tuple(o) for o in init_opts),
            level_options=tuple(tuple(o) for o in level_opts),
            grid=grid,
        )

    @classmethod
    def single(cls, config: AbstractConfig) -> "SearchSpace":
        return cls(
            init_options=tuple((k,) for k in config.init_indices),
            level_options=tuple((k,) for k in config.lambda_levels),
            grid=config.grid,
        )


class ToleranceMode(enum.Enum):
    KAPPA = "kappa"
    KAPPA_PLUS_DELTA = "kappa+delta"
    KAPPA_MINUS_DELTA = "kappa-delta"


@dataclass(frozen=True)
class VerificationProblem:
    spec: ObservationSpec
    space: SearchSpace
    delta: float = 0.0
    gamma: float = 0.5

    def __post_init__(self):
        if self.space.n != self.spec.n:
            raise ValueError("search space and observations differ in agent count")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")

    @property
    def grid(self) -> AbstractGrid:
        return self.space.grid

    def effective_kappa(self, mode: ToleranceMode) -> Fraction:
        k = self.spec.kappa
        d = as_fraction(self.delta)
        if mode is ToleranceMode.KAPPA:
            return k
        if mode is ToleranceMode.KAPPA_PLUS_DELTA:
            return k + d
        return max(k - d, Fraction(0))

    def mismatch_budget(self, mode: ToleranceMode) -> int:
        """Per-step mismatch count allowed at the mode's tolerance."""
        return math.floor(self.effective_kappa(mode) * self.spec.n)


@dataclass
class Verdict:
    status: str  # CONSISTENT | INCONSISTENT | INCONCLUSIVE
    engine: str  # ENUMERATION | SMT
    witnesses: list[AbstractConfig] = field(default_factory=list)
    count: int | None = None
    tolerance_mode: ToleranceMode | None = None
    notices: list[str] = field(default_factory=list)
    evidence: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status == "CONSISTENT" and not self.witnesses:
            raise ValueError("a CONSISTENT verdict requires at least one witness")
