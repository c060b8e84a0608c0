"""Finite abstractions of the dynamics and simulation-relation certificates.

An abstraction family is described by a grid: initial opinions restricted to
the d_x midpoint values (2k+1)/(2 d_x), stubbornness restricted to the
d_lambda + 1 levels k/d_lambda, and a surrogate influence matrix within
spectral distance eps_w of the true one. Snapping a concrete configuration
onto the grid keeps per-entry errors below half a cell, which feeds the
one-step perturbation budget

    eps_x = (||W|| + 1) / (2 d_lambda) + 1 / (2 d_x) + eps_w.

When the concrete system is a contraction (||(I - L) W|| = rho < 1) the state
gap stays below eps_x sqrt(n) / (1 - rho) forever, and under the certificate
conditions below the abstraction tracks the concrete system within delta in
both state distance (scaled by sqrt(n)) and output Hamming distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dynamics import (
    InfluenceMatrix,
    NotContractiveError,
    StubbornnessVector,
    Trajectory,
    as_fraction,
    contraction_factor,
    simulate,
    simulate_exact,
    spectral_norm,
)

# absolute slack used when float comparisons sit exactly on a bound
_EDGE_SLACK = 1e-12


@dataclass(frozen=True)
class ModelConfig:
    """A concrete configuration: initial opinions and parameters."""

    x_init: np.ndarray
    lam: StubbornnessVector
    w: InfluenceMatrix

    def __post_init__(self):
        x = np.asarray(self.x_init, dtype=float)
        x.setflags(write=False)
        object.__setattr__(self, "x_init", x)
        if x.ndim != 1 or x.shape[0] != self.lam.n or x.shape[0] != self.w.n:
            raise ValueError("configuration sizes differ")
        if np.any(x < 0) or np.any(x > 1):
            raise ValueError("initial opinions must lie in [0, 1]")

    @property
    def n(self) -> int:
        return self.x_init.shape[0]

    def simulate(self, horizon: int, gamma: float = 0.5) -> Trajectory:
        return simulate(self.x_init, self.lam, self.w, horizon, gamma)


@dataclass(frozen=True)
class AbstractGrid:
    d_x: int
    d_lambda: int
    w_ab: InfluenceMatrix
    eps_w: float = 0.0

    def __post_init__(self):
        if self.d_x < 1 or self.d_lambda < 1:
            raise ValueError("grid resolutions must be positive integers")
        if self.eps_w < 0:
            raise ValueError("eps_w must be nonnegative")

    @property
    def n(self) -> int:
        return self.w_ab.n

    def grid_values(self) -> tuple[Fraction, ...]:
        """Initial-opinion grid: cell midpoints (2k+1)/(2 d_x), k = 0..d_x-1."""
        return tuple(Fraction(2 * k + 1, 2 * self.d_x) for k in range(self.d_x))

    def levels(self) -> tuple[Fraction, ...]:
        """Stubbornness levels k/d_lambda, k = 0..d_lambda."""
        return tuple(Fraction(k, self.d_lambda) for k in range(self.d_lambda + 1))


@dataclass(frozen=True)
class AbstractConfig:
    """Grid indices identifying one abstract configuration."""

    init_indices: tuple[int, ...]
    lambda_levels: tuple[int, ...]
    grid: AbstractGrid

    def __post_init__(self):
        if len(self.init_indices) != len(self.lambda_levels):
            raise ValueError("index vectors differ in length")
        if any(not 0 <= k < self.grid.d_x for k in self.init_indices):
            raise ValueError("initial-opinion index out of range")
        if any(not 0 <= k <= self.grid.d_lambda for k in self.lambda_levels):
            raise ValueError("stubbornness level out of range")

    @property
    def n(self) -> int:
        return len(self.init_indices)

    def x_init_exact(self) -> tuple[Fraction, ...]:
        vals = self.grid.grid_values()
        return tuple(vals[k] for k in self.init_indices)

    def lambda_exact(self) -> tuple[Fraction, ...]:
        lev = self.grid.levels()
        return tuple(lev[k] for k in self.lambda_levels)

    def x_init(self) -> np.ndarray:
        return np.array([float(v) for v in self.x_init_exact()])

    def lam(self) -> StubbornnessVector:
        return StubbornnessVector(np.array([float(v) for v in self.lambda_exact()]))

    def simulate(self, horizon: int, gamma: float = 0.5) -> Trajectory:
        return simulate(self.x_init(), self.lam(), self.grid.w_ab, horizon, gamma)

    def simulate_exact(self, horizon: int, gamma=Fraction(1, 2)):
        return simulate_exact(self.x_init_exact(), self.lambda_exact(),
                              self.grid.w_ab, horizon, gamma)


def snap_initial(x_init, d_x: int) -> tuple[int, ...]:
    """Nearest grid index per entry; exact midpoint ties go to the lower cell.

    The snapped value is within 1/(2 d_x) of the input entrywise, hence
    within sqrt(n)/(2 d_x) in Euclidean norm.
    """
    out = []
    for v in np.asarray(x_init, dtype=float):
        if not 0 <= v <= 1:
            raise ValueError("initial opinions must lie in [0, 1]")
        q = as_fraction(v) * d_x
        if q.denominator == 1 and q >= 1:
            idx = int(q) - 1  # cell boundary: midpoint between two grid values
        else:
            idx = math.floor(q)
        out.append(idx)
    return tuple(out)


def snap_stubbornness(lam, d_lambda: int) -> tuple[int, ...]:
    """Nearest level index per entry; exact midpoint ties go to the lower level."""
    values = lam.values if isinstance(lam, StubbornnessVector) else np.asarray(lam, dtype=float)
    out = []
    for v in values:
        if not 0 <= v <= 1:
            raise ValueError("stubbornness must lie in [0, 1]")
        q = as_fraction(v) * d_lambda
        base = math.floor(q)
        frac = q - base
        level = base if frac <= Fraction(1, 2) else base + 1
        out.append(min(level, d_lambda))
    return tuple(out)


def snap_config(config: ModelConfig, grid: AbstractGrid) -> AbstractConfig:
    return AbstractConfig(
        init_indices=snap_initial(config.x_init, grid.d_x),
        lambda_levels=snap_stubbornness(config.lam, grid.d_lambda),
        grid=grid,
    )


def step_error_budget(w: InfluenceMatrix, d_lambda: int, d_x: int, eps_w: float) -> float:
    """One-step perturbation budget eps_x combining grid and weight errors."""
    if d_lambda < 1 or d_x < 1:
        raise ValueError("grid resolutions must be positive")
    if eps_w < 0:
        raise ValueError("eps_w must be nonnegative")
    return (spectral_norm(w.values) + 1.0) / (2 * d_lambda) + 1.0 / (2 * d_x) + eps_w


def uniform_error_bound(rho: float, eps_x: float, n: int) -> float:
    """Time-uniform state-gap bound eps_x sqrt(n) / (1 - rho); needs rho < 1."""
    if rho >= 1:
        raise NotContractiveError(f"contraction factor {rho} is not < 1")
    return eps_x * math.sqrt(n) / (1.0 - rho)


def check_one_step_error_bound(
    traj: Trajectory,
    traj_ab: Trajectory,
    rho: float,
    eps_x: float,
    slack: float = 1e-9,
) -> bool:
    """Per-step gap growth bound: ||e(t+1)|| <= rho ||e(t)|| + sqrt(n) eps_x."""
    if traj.horizon != traj_ab.horizon:
        raise ValueError("trajectories differ in horizon")
    x = traj.opinions()
    x_ab = traj_ab.opinions()
    gaps = np.linalg.norm(x - x_ab, axis=1)
    n = traj.n
    for t in range(traj.horizon):
        if gaps[t + 1] > rho * gaps[t] + math.sqrt(n) * eps_x + slack:
            return False
    return True


def near_threshold_indices(x, eta: float, gamma: float) -> np.ndarray:
    """Agents whose opinion is within eta of the output threshold."""
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    return np.nonzero(np.abs(np.asarray(x, dtype=float) - gamma) <= eta)[0]


def check_near_threshold_budget(traj: Trajectory, delta: float, gamma: float) -> bool:
    """At every visited step, at most delta*n/2 agents sit within sqrt(2 delta)
    of the threshold. Checked over the trajectory's finite horizon only."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    eta = math.sqrt(2.0 * delta)
    budget = delta * traj.n / 2.0
    for state in traj.states:
        if near_threshold_indices(state.current, eta, gamma).size > budget:
            return False
    return True


@dataclass(frozen=True)
class SimulationCertificate:
    """Evidence that the snapped abstraction tracks a concrete system within delta.

    `conditions` records the individual hypotheses; the certificate is VALID
    only when all hold. `delta_min` is the smallest delta the evaluated
    quantities admit (conditions on the grid and the budget lower-bound
    delta; there is no finite upper endpoint).
    """

    delta: float
    rho: float
    eps_x: float
    conditions: dict
    delta_min: float
    horizon: int
    gamma: float

    @property
    def valid(self) -> bool:
        return all(self.conditions.values())

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "rho": self.rho,
            "eps_x": self.eps_x,
            "valid": self.valid,
            "conditions": dict(self.conditions),
            "admissible_delta_min": self.delta_min,
            "horizon_checked": self.horizon,
            "gamma": self.gamma,
        }


def certify_simulation(
    config: ModelConfig,
    grid: AbstractGrid,
    delta: float,
    horizon: int,
    gamma: float = 0.5,
) -> SimulationCertificate:
    """Evaluate the four certificate conditions for one concrete configuration.

    Conditions: the initial grid resolves delta (d_x >= 1/(2 delta)); the
    concrete system contracts (rho < 1); the perturbation budget fits
    (eps_x <= (1 - rho) delta); and the near-threshold budget holds along the
    concrete trajectory over the given horizon. Invalid certificates are
    returned, not raised.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    rho = contraction_factor(config.lam, config.w)
    eps_x = step_error_budget(config.w, grid.d_lambda, grid.d_x, grid.eps_w)
    delta_q = as_fraction(delta)
    grid_fine_enough = Fraction(2) * delta_q * grid.d_x >= 1
    contractive = rho < 1.0
    budget_ok = contractive and eps_x <= (1.0 - rho) * delta + _EDGE_SLACK
    traj = config.simulate(horizon, gamma)
    margin_ok = check_near_threshold_budget(traj, delta, gamma)
    if contractive:
        delta_min = max(eps_x / (1.0 - rho), 1.0 / (2 * grid.d_x))
    else:
        delta_min = math.inf
    return SimulationCertificate(
        delta=delta,
        rho=rho,
        eps_x=eps_x,
        conditions={
            "grid_fine_enough": bool(grid_fine_enough),
            "contractive": bool(contractive),
            "budget_within_delta": bool(budget_ok),
            "near_threshold_budget": bool(margin_ok),
        },
        delta_min=delta_min,
        horizon=horizon,
        gamma=gamma,
    )


@dataclass(frozen=True)
class ParameterBox:
    """Per-agent intervals for initial opinions and stubbornness."""

    init_intervals: tuple[tuple[float, float], ...]
    lambda_intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.init_intervals) != len(self.lambda_intervals):
            raise ValueError("interval lists differ in length")
        if not self.init_intervals:
            raise ValueError("empty box")
        for lo, hi in list(self.init_intervals) + list(self.lambda_intervals):
            if not (0 <= lo <= hi <= 1):
                raise ValueError(f"bad interval [{lo}, {hi}]")

    @property
    def n(self) -> int:
        return len(self.init_intervals)

    def sample(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        x = np.array([rng.uniform(lo, hi) for lo, hi in self.init_intervals])
        lam = np.array([rng.uniform(lo, hi) for lo, hi in self.lambda_intervals])
        return x, lam


def cover_indices(box: ParameterBox, grid: AbstractGrid) -> tuple[list[list[int]], list[list[int]]]:
    """Per-agent grid options whose cells intersect the box.

    Both interval ends are treated as inclusive, so the result is a superset
    of the snap images of every point in the box (snapping maps boundary
    midpoints to the lower cell, and both neighbouring cells are kept here).
    """
    init_options: list[list[int]] = []
    level_options: list[list[int]] = []
    half_x = Fraction(1, 2 * grid.d_x)
    half_l = Fraction(1, 2 * grid.d_lambda)
    values = grid.grid_values()
    levels = grid.levels()
    for lo, hi in box.init_intervals:
        lo_q, hi_q = as_fraction(lo), as_fraction(hi)
        opts = [k for k, g in enumerate(values) if g - half_x <= hi_q and g + half_x >= lo_q]
        init_options.append(opts)
    for lo, hi in box.lambda_intervals:
        lo_q, hi_q = as_fraction(lo), as_fraction(hi)
        opts = [k for k, g in enumerate(levels) if g - half_l <= hi_q and g + half_l >= lo_q]
        level_options.append(opts)
    return init_options, level_options


def levels_within(lam_star, eps, grid: AbstractGrid) -> list[list[int]]:
    """Per-agent levels whose value lies within eps of lam_star (membership,
    not cell intersection)."""
    eps_q = as_fraction(eps)
    levels = grid.levels()
    out = []
    for v in np.asarray(lam_star, dtype=float):
        v_q = as_fraction(v)
        opts = [k for k, g in enumerate(levels) if abs(g - v_q) <= eps_q]
        if not opts:
            raise ValueError(f"no admissible level within {eps} of {v}")
        out.append(opts)
    return out
