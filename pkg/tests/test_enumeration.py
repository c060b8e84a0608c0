import itertools
from fractions import Fraction

import numpy as np
import pytest

from fjverify.abstraction import AbstractConfig, AbstractGrid
from fjverify.dynamics import InfluenceMatrix
from fjverify.enumeration import enumerate_verify
from fjverify.observation import ObservationSpec
from fjverify.search import (
    SearchSpace,
    SearchSpaceOverflow,
    ToleranceMode,
    Verdict,
    VerificationProblem,
)


def grid2(n, d_x=2, d_lambda=2, w=None):
    w = w or InfluenceMatrix.from_rows(np.full((n, n), 1.0 / n))
    return AbstractGrid(d_x=d_x, d_lambda=d_lambda, w_ab=w)


def problem_for(obs, grid, kappa=0, delta=0.0):
    spec = ObservationSpec(observed=np.array(obs, dtype=np.uint8), kappa=Fraction(kappa))
    return VerificationProblem(spec=spec, space=SearchSpace.full(grid, spec.n), delta=delta)


# -------------------------------------------------------------- search space


def test_space_size_and_indexing_roundtrip():
    grid = grid2(2)
    space = SearchSpace.full(grid, 2)
    assert space.size() == (2 * 2) * (3 * 3)
    seen = set()
    for idx in range(space.size()):
        cfg = space.config_at(idx)
        assert space.index_of(cfg) == idx
        seen.add((cfg.init_indices, cfg.lambda_levels))
    assert len(seen) == space.size()


def test_space_restrict_levels():
    grid = grid2(2)
    space = SearchSpace.full(grid, 2)
    restricted = space.restrict_levels([[0, 1], [2]])
    assert restricted.size() == 4 * 2 * 1
    with pytest.raises(ValueError):
        space.restrict_levels([[0], []])


def test_space_contains():
    grid = grid2(2)
    space = SearchSpace.full(grid, 2).restrict_levels([[0], [1, 2]])
    good = AbstractConfig(init_indices=(0, 1), lambda_levels=(0, 2), grid=grid)
    bad = AbstractConfig(init_indices=(0, 1), lambda_levels=(1, 2), grid=grid)
    assert space.contains(good)
    assert not space.contains(bad)


# -------------------------------------------------------------- enumeration


def brute_force_consistent(problem, mode):
    """Independent oracle: pure-Fraction simulation of every configuration."""
    space = problem.space
    grid = space.grid
    spec = problem.spec
    budget = problem.mismatch_budget(mode)
    gamma = Fraction(problem.gamma)
    vals = grid.grid_values()
    levels = grid.levels()
    w = grid.w_ab.exact
    n = spec.n
    hits = []
    for inits in itertools.product(*space.init_options):
        for levs in itertools.product(*space.level_options):
            x = [vals[k] for k in inits]
            x0 = list(x)
            lam = [levels[k] for k in levs]
            ok = True
            for t in range(spec.horizon + 1):
                mism = sum(
                    (1 if x[i] >= gamma else 0) != int(spec.observed[t][i])
                    for i in range(n))
                if mism > budget:
                    ok = False
                    break
                if t < spec.horizon:
                    x = [
                        (1 - lam[i]) * sum(w[i][j] * x[j] for j in range(n))
                        + lam[i] * x0[i]
                        for i in range(n)
                    ]
            if ok:
                hits.append((inits, levs))
    return hits


def test_planted_solution_is_found():
    grid = grid2(3, d_x=2, d_lambda=3)
    planted = AbstractConfig(init_indices=(0, 1, 1), lambda_levels=(1, 3, 0), grid=grid)
    traj = planted.simulate(4)
    problem = problem_for(traj.outputs, grid, kappa=0)
    verdict = enumerate_verify(problem, witness_cap=None)
    assert verdict.status == "CONSISTENT"
    keys = {(w.init_indices, w.lambda_levels) for w in verdict.witnesses}
    assert (planted.init_indices, planted.lambda_levels) in keys
    assert verdict.count == len(verdict.witnesses)


def test_kappa_one_accepts_everything():
    grid = grid2(2)
    problem = problem_for(np.zeros((3, 2)), grid, kappa=1)
    verdict = enumerate_verify(problem)
    assert verdict.status == "CONSISTENT"
    assert verdict.count == problem.space.size()


def test_unreachable_observations_with_hand_enumeration():
    # 36-configuration space checked against the pure-Fraction oracle
    grid = grid2(2, d_x=2, d_lambda=2)
    problem = problem_for([[1, 0], [0, 1], [1, 0]], grid, kappa=0)
    assert problem.space.size() == 36
    oracle_hits = brute_force_consistent(problem, ToleranceMode.KAPPA)
    verdict = enumerate_verify(problem, witness_cap=None)
    assert verdict.count == len(oracle_hits)
    got = [(w.init_indices, w.lambda_levels) for w in verdict.witnesses]
    assert got == oracle_hits
    if not oracle_hits:
        assert verdict.status == "INCONSISTENT"


@pytest.mark.parametrize("seed", range(12))
def test_enumeration_matches_fraction_oracle_on_random_problems(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 4))
    raw = rng.integers(0, 4, size=(n, n)) + np.eye(n, dtype=int)
    w = InfluenceMatrix.from_rows([
        [Fraction(int(v), int(row.sum())) for v in row] for row in raw])
    grid = grid2(n, d_x=2, d_lambda=2, w=w)
    horizon = int(rng.integers(1, 4))
    obs = rng.integers(0, 2, size=(horizon + 1, n))
    kappa = Fraction(int(rng.integers(0, 3)), n)
    problem = problem_for(obs, grid, kappa=kappa)
    for mode in ToleranceMode:
        oracle = brute_force_consistent(problem, mode)
        verdict = enumerate_verify(problem, mode, witness_cap=None)
        assert verdict.count == len(oracle)
        assert [(w.init_indices, w.lambda_levels) for w in verdict.witnesses] == oracle


def test_tolerance_modes_shift_kappa():
    grid = grid2(2)
    spec = ObservationSpec(observed=np.zeros((2, 2), dtype=np.uint8), kappa=Fraction(1, 2))
    problem = VerificationProblem(spec=spec, space=SearchSpace.full(grid, 2), delta=0.5)
    assert problem.effective_kappa(ToleranceMode.KAPPA) == Fraction(1, 2)
    assert problem.effective_kappa(ToleranceMode.KAPPA_PLUS_DELTA) == 1
    assert problem.effective_kappa(ToleranceMode.KAPPA_MINUS_DELTA) == 0
    lower = VerificationProblem(spec=spec.with_kappa(Fraction(1, 4)),
                                space=SearchSpace.full(grid, 2), delta=0.5)
    assert lower.effective_kappa(ToleranceMode.KAPPA_MINUS_DELTA) == 0  # clamped


def test_space_cap_overflow():
    grid = grid2(2, d_x=9, d_lambda=9)
    problem = problem_for(np.zeros((1, 2)), grid)
    with pytest.raises(SearchSpaceOverflow):
        enumerate_verify(problem, space_cap=100)


def test_witness_truncation_keeps_exact_count():
    grid = grid2(2)
    problem = problem_for(np.zeros((1, 2)), grid, kappa=1)
    verdict = enumerate_verify(problem, witness_cap=5)
    assert len(verdict.witnesses) == 5
    assert verdict.count == problem.space.size()


def test_boundary_riding_trajectories_are_decided_exactly():
    # opinions that sit exactly on the threshold: the float path is ambiguous
    # there, so exact rational rechecks must settle the verdict
    n = 2
    w = InfluenceMatrix.from_rows([[0.5, 0.5], [0.5, 0.5]])
    grid = AbstractGrid(d_x=2, d_lambda=1, w_ab=w)
    planted = AbstractConfig(init_indices=(0, 1), lambda_levels=(0, 0), grid=grid)
    # x(1) = (1/2, 1/2) exactly, quantizing to (1, 1) by the tie rule
    path = planted.simulate_exact(2)
    assert path[1] == [Fraction(1, 2), Fraction(1, 2)]
    traj = planted.simulate(2)
    problem = problem_for(traj.outputs, grid, kappa=0)
    verdict = enumerate_verify(problem, witness_cap=None)
    oracle = brute_force_consistent(problem, ToleranceMode.KAPPA)
    assert verdict.count == len(oracle)
    assert verdict.evidence["exact_rechecks"] > 0


def test_verdict_requires_witness_for_consistent():
    with pytest.raises(ValueError):
        Verdict(status="CONSISTENT", engine="ENUMERATION", witnesses=[])
