"""Exhaustive verification over a finite search space.

Batches of configurations are simulated with vectorized float64 arithmetic.
Floating error can only change a verdict when an opinion sits within the
numerical band of the output threshold, so each batch tracks, per step, the
mismatch count and the number of band-ambiguous bits: a configuration whose
counts stay conclusive on every step is classified directly, anything else
is re-simulated in exact rational arithmetic. The result is an exact oracle
at vectorized speed.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .abstraction import AbstractConfig
from .dynamics import as_fraction
from .search import SearchSpace, SearchSpaceOverflow, ToleranceMode, Verdict, VerificationProblem

# |x - gamma| band inside which a float64 output bit is not trusted; the
# simulation accumulates at most ~n * 2^-52 per step over the horizons used
# here, so 1e-11 over-covers by several orders of magnitude.
AMBIGUITY_BAND = 1e-11

DEFAULT_SPACE_CAP = 10_000_000
DEFAULT_WITNESS_CAP = 100
_BATCH = 1 << 16


def _decode_digits(start: int, stop: int, radices: list[int]) -> np.ndarray:
    """Digits of linear indices start..stop-1, shape (stop-start, len(radices))."""
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((idx.size, len(radices)), dtype=np.int64)
    for pos in range(len(radices) - 1, -1, -1):
        out[:, pos] = idx % radices[pos]
        idx //= radices[pos]
    return out


def _exact_consistent(config: AbstractConfig, obs: np.ndarray, budget: int,
                      horizon: int, gamma: Fraction) -> bool:
    """Exact rational re-simulation with early exit on a violated step."""
    w = config.grid.w_ab.exact
    n = config.n
    x = list(config.x_init_exact())
    x0 = list(x)
    lam = config.lambda_exact()
    for t in range(horizon + 1):
        mism = 0
        for i in range(n):
            bit = 1 if x[i] >= gamma else 0
            if bit != int(obs[t][i]):
                mism += 1
        if mism > budget:
            return False
        if t < horizon:
            x = [
                (1 - lam[i]) * sum(w[i][j] * x[j] for j in range(n) if w[i][j])
                + lam[i] * x0[i]
                for i in range(n)
            ]
    return True


def enumerate_verify(
    problem: VerificationProblem,
    tolerance_mode: ToleranceMode = ToleranceMode.KAPPA,
    witness_cap: int | None = DEFAULT_WITNESS_CAP,
    space_cap: int = DEFAULT_SPACE_CAP,
) -> Verdict:
    """Simulate every configuration in the space; exact, hence the oracle.

    Returns a verdict with the exact number of satisfying configurations and
    the first `witness_cap` witnesses in space order (None keeps them all).
    """
    space = problem.space
    size = space.size()
    if size > space_cap:
        raise SearchSpaceOverflow(
            f"search space has {size} configurations, cap is {space_cap}")
    spec = problem.spec
    n = spec.n
    horizon = spec.horizon
    budget = problem.mismatch_budget(tolerance_mode)
    gamma = problem.gamma
    gamma_q = as_fraction(gamma)
    grid = space.grid

    if budget >= n:
        # every step predicate is vacuous
        count = size
        witnesses = []
        cap = size if witness_cap is None else min(witness_cap, size)
        for idx in range(cap):
            witnesses.append(space.config_at(idx))
        return Verdict(status="CONSISTENT", engine="ENUMERATION", witnesses=witnesses,
                       count=count, tolerance_mode=tolerance_mode)

    radices = space.radices()
    init_maps = [np.array(opts, dtype=np.int64) for opts in space.init_options]
    level_maps = [np.array(opts, dtype=np.int64) for opts in space.level_options]
    grid_vals = np.array([float(v) for v in grid.grid_values()])
    w_t = grid.w_ab.values.T
    obs = spec.observed
    obs_bool = obs.astype(bool)

    count = 0
    witnesses: list[AbstractConfig] = []
    rechecked = 0
    for start in range(0, size, _BATCH):
        stop = min(start + _BATCH, size)
        digits = _decode_digits(start, stop, radices)
        b = stop - start
        init_idx = np.empty((b, n), dtype=np.int64)
        lev_idx = np.empty((b, n), dtype=np.int64)
        for i in range(n):
            init_idx[:, i] = init_maps[i][digits[:, i]]
            lev_idx[:, i] = level_maps[i][digits[:, n + i]]
        x0 = grid_vals[init_idx]
        lam = lev_idx.astype(float) / grid.d_lambda
        x = x0.copy()
        ok = np.ones(b, dtype=bool)        # all steps conclusively within budget
        bad = np.zeros(b, dtype=bool)      # some step conclusively over budget
        for t in range(horizon + 1):
            bits = x >= gamma
            mism = (bits != obs_bool[t]).sum(axis=1)
            amb = (np.abs(x - gamma) <= AMBIGUITY_BAND).sum(axis=1)
            ok &= (mism + amb) <= budget
            bad |= (mism - amb) > budget
            if t < horizon:
                x = (1.0 - lam) * (x @ w_t) + lam * x0
        unsure = ~(ok | bad)
        if np.any(unsure):
            for local in np.nonzero(unsure)[0]:
                cfg = AbstractConfig(
                    init_indices=tuple(int(v) for v in init_idx[local]),
                    lambda_levels=tuple(int(v) for v in lev_idx[local]),
                    grid=grid,
                )
                rechecked += 1
                if _exact_consistent(cfg, obs, budget, horizon, gamma_q):
                    ok[local] = True
        hits = np.nonzero(ok)[0]
        count += int(hits.size)
        if witness_cap is None or len(witnesses) < witness_cap:
            for local in hits:
                if witness_cap is not None and len(witnesses) >= witness_cap:
                    break
                witnesses.append(AbstractConfig(
                    init_indices=tuple(int(v) for v in init_idx[local]),
                    lambda_levels=tuple(int(v) for v in lev_idx[local]),
                    grid=grid,
                ))

    status = "CONSISTENT" if count > 0 else "INCONSISTENT"
    return Verdict(status=status, engine="ENUMERATION", witnesses=witnesses,
                   count=count, tolerance_mode=tolerance_mode,
                   evidence={"exact_rechecks": rechecked})
