"""Friedkin-Johnsen dynamics in augmented form, with threshold outputs.

The update is x(t+1) = (I - L) W x(t) + L x(0) where L = diag(lambda) holds
per-agent stubbornness in [0, 1] and W is row-stochastic. Stacking the
anchored initial opinions under the current ones makes the map linear and
time-invariant; the binary output of agent i at time t is 1 iff its opinion
is at or above the threshold gamma.

Two arithmetic paths coexist: float64 for simulation speed, and exact
`fractions.Fraction` for everything whose truth can hinge on a quantization
boundary (the constraint encoder and the witness validation gate consume the
exact path).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

ROW_SUM_TOL = 1e-12

RationalMatrix = tuple[tuple[Fraction, ...], ...]


class DimensionMismatchError(ValueError):
    pass


class NotContractiveError(ValueError):
    pass


def as_fraction(x) -> Fraction:
    """Exact rational value of a number (floats convert losslessly)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        return Fraction(float(x))
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot interpret {type(x).__name__} as a rational")


@dataclass(frozen=True)
class StubbornnessVector:
    """Per-agent stubbornness weights, each in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if v.ndim != 1:
            raise ValueError("stubbornness must be a vector")
        if np.any(v < 0) or np.any(v > 1):
            raise ValueError("stubbornness entries must lie in [0, 1]")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def exact(self) -> tuple[Fraction, ...]:
        return tuple(as_fraction(v) for v in self.values)


@dataclass(frozen=True)
class BlockStructure:
    """Marks a matrix as block-constant over a community partition.

    `values[a][b]` is the exact entry shared by all (i, j) with i in
    community a, j in community b, i != j; the diagonal is zero. The
    constraint encoder uses this to factor row sums into per-community
    partial sums.
    """

    communities: tuple[tuple[int, ...], ...]
    values: tuple[tuple[Fraction, ...], ...]

    @property
    def k(self) -> int:
        return len(self.communities)

    def community_of(self, n: int) -> np.ndarray:
        out = np.full(n, -1, dtype=int)
        for c, members in enumerate(self.communities):
            out[list(members)] = c
        if np.any(out < 0):
            raise ValueError("communities do not cover all agents")
        return out


@dataclass(frozen=True)
class InfluenceMatrix:
    """Row-stochastic influence weights, kept in exact rational form.

    `exact` is the authoritative value; `values` is its float64 image used
    by the fast simulation paths.
    """

    exact: RationalMatrix
    values: np.ndarray = field(init=False, repr=False)
    block: BlockStructure | None = None

    def __post_init__(self):
        n = len(self.exact)
        for row in self.exact:
            if len(row) != n:
                raise DimensionMismatchError("influence matrix must be square")
            if any(e < 0 for e in row):
                raise ValueError("influence weights must be nonnegative")
            if sum(row) != 1:
                # exact rows should sum to exactly 1; float-sourced rows get
                # the documented tolerance
                if abs(float(sum(row)) - 1.0) > ROW_SUM_TOL:
                    raise ValueError("influence matrix rows must sum to 1")
        v = np.array([[float(e) for e in row] for row in self.exact], dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.block is not None and not self._block_consistent():
            raise ValueError("block structure does not match matrix entries")

    def _block_consistent(self) -> bool:
        comm = self.block.community_of(self.n)
        for i in range(self.n):
            for j in range(self.n):
                want = Fraction(0) if i == j else self.block.values[comm[i]][comm[j]]
                if self.exact[i][j] != want:
                    return False
        return True

    @classmethod
    def from_rows(cls, rows, block: BlockStructure | None = None) -> "InfluenceMatrix":
        exact = tuple(tuple(as_fraction(e) for e in row) for row in rows)
        return cls(exact=exact, block=block)

    @property
    def n(self) -> int:
        return len(self.exact)


@dataclass(frozen=True)
class AugmentedState:
    """Current opinions plus the anchored initial opinions."""

    current: np.ndarray
    anchor: np.ndarray

    def __post_init__(self):
        cur = np.asarray(self.current, dtype=float)
        anc = np.asarray(self.anchor, dtype=float)
        cur.setflags(write=False)
        anc.setflags(write=False)
        object.__setattr__(self, "current", cur)
        object.__setattr__(self, "anchor", anc)
        if cur.shape != anc.shape or cur.ndim != 1:
            raise DimensionMismatchError("state vectors must be 1-d and equal length")

    @classmethod
    def initial(cls, x_init) -> "AugmentedState":
        x = np.asarray(x_init, dtype=float)
        return cls(current=x, anchor=x.copy())

    @property
    def n(self) -> int:
        return self.current.shape[0]


@dataclass(frozen=True)
class Trajectory:
    """States and binary outputs for t = 0..horizon."""

    states: list[AugmentedState]
    outputs: np.ndarray  # (horizon+1, n) uint8
    gamma: float

    @property
    def horizon(self) -> int:
        return len(self.states) - 1

    @property
    def n(self) -> int:
        return self.states[0].n

    def opinions(self) -> np.ndarray:
        """Opinion matrix of shape (horizon+1, n)."""
        return np.stack([s.current for s in self.states])


def quantize(x, gamma: float) -> np.ndarray:
    """Binary output: 1 where x_i >= gamma, else 0. Ties map to 1."""
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    return (np.asarray(x, dtype=float) >= gamma).astype(np.uint8)


def hamming(a, b) -> Fraction:
    """Normalized Hamming distance between binary vectors, exact."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionMismatchError("binary vectors differ in length")
    return Fraction(int(np.sum(a != b)), a.shape[0])


def fj_step(state: AugmentedState, lam: StubbornnessVector, w: InfluenceMatrix) -> AugmentedState:
    """One update of the stacked system; the anchor block is the identity."""
    if not (state.n == lam.n == w.n):
        raise DimensionMismatchError("state, stubbornness and matrix sizes differ")
    nxt = (1.0 - lam.values) * (w.values @ state.current) + lam.values * state.anchor
    return AugmentedState(current=nxt, anchor=state.anchor)


def simulate(
    x_init,
    lam: StubbornnessVector,
    w: InfluenceMatrix,
    horizon: int,
    gamma: float = 0.5,
) -> Trajectory:
    """Unique path of the system from the duplicated initial state."""
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    x = np.asarray(x_init, dtype=float)
    if np.any(x < 0) or np.any(x > 1):
        raise ValueError("initial opinions must lie in [0, 1]")
    state = AugmentedState.initial(x)
    states = [state]
    for _ in range(horizon):
        state = fj_step(state, lam, w)
        states.append(state)
    outputs = np.stack([quantize(s.current, gamma) for s in states])
    return Trajectory(states=states, outputs=outputs, gamma=gamma)


def simulate_exact(
    x_init,
    lam,
    w: InfluenceMatrix,
    horizon: int,
    gamma=Fraction(1, 2),
) -> list[list[Fraction]]:
    """Exact rational opinion trajectory; settles quantization boundaries.

    Returns opinions for t = 0..horizon as lists of Fractions; outputs
    follow from `x >= gamma` with no floating error.
    """
    gamma = as_fraction(gamma)
    x = [as_fraction(v) for v in x_init]
    lam_q = [as_fraction(v) for v in (lam.values if isinstance(lam, StubbornnessVector) else lam)]
    n = len(x)
    if n != w.n or len(lam_q) != n:
        raise DimensionMismatchError("sizes differ")
    x0 = list(x)
    path = [list(x)]
    for _ in range(horizon):
        x = [
            (1 - lam_q[i]) * sum(w.exact[i][j] * x[j] for j in range(n) if w.exact[i][j])
            + lam_q[i] * x0[i]
            for i in range(n)
        ]
        path.append(list(x))
    return path


def exact_outputs(path: list[list[Fraction]], gamma=Fraction(1, 2)) -> np.ndarray:
    gamma = as_fraction(gamma)
    return np.array([[1 if v >= gamma else 0 for v in row] for row in path], dtype=np.uint8)


def _power_iterate(gram: np.ndarray, v: np.ndarray) -> float | None:
    """Dominant eigenvalue of a PSD matrix reachable from start v, or None."""
    prev = 0.0
    for _ in range(10000):
        u = gram @ v
        norm = float(np.linalg.norm(u))
        if norm == 0.0:
            return 0.0
        v = u / norm
        if abs(norm - prev) <= 1e-10:
            return norm
        prev = norm
    return None


def spectral_norm(m) -> float:
    """Largest singular value via power iteration on M^T M.

    Deterministic: an all-ones start plus a fixed seeded start, keeping the
    larger converged value (the all-ones vector alone can be orthogonal to
    the top singular direction, e.g. for [[-a, a], [0, 0]]). Absolute
    tolerance 1e-10, at most 10000 iterations per start, error if neither
    converges. Diagonal matrices short-circuit to max |entry| exactly.
    """
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise ValueError("matrix expected")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    if a.size == 0:
        return 0.0
    off = a - np.diag(np.diag(a)) if a.shape[0] == a.shape[1] else None
    if off is not None and not np.any(off):
        return float(np.max(np.abs(np.diag(a))))
    gram = a.T @ a
    k = a.shape[1]
    starts = [np.ones(k) / np.sqrt(k)]
    alt = np.random.default_rng(0).standard_normal(k)
    starts.append(alt / np.linalg.norm(alt))
    results = [r for r in (_power_iterate(gram, v) for v in starts) if r is not None]
    if not results:
        raise ArithmeticError("power iteration did not converge within 10000 steps")
    return float(np.sqrt(max(results)))


def contraction_factor(lam: StubbornnessVector, w: InfluenceMatrix) -> float:
    """Spectral norm of (I - L) W, the per-step error contraction rate."""
    if lam.n != w.n:
        raise DimensionMismatchError("sizes differ")
    return spectral_norm((1.0 - lam.values)[:, None] * w.values)
