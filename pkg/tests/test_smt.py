from fractions import Fraction

import numpy as np
import pytest

from conftest import needs_solver
from fjverify.abstraction import AbstractConfig, AbstractGrid
from fjverify.dynamics import InfluenceMatrix
from fjverify.enumeration import enumerate_verify
from fjverify.observation import ObservationSpec
from fjverify.search import SearchSpace, ToleranceMode, VerificationProblem
from fjverify.smt import (
    blocking_clause,
    count_real_vars,
    encode_smtlib,
    model_values_to_config,
    selection_names,
)
from fjverify.solver import (
    SmtSession,
    SolverTimeout,
    parse_define_fun_ints,
    run_solver,
)
from fjverify.verify import (
    EngineDisagreement,
    ModelValidationError,
    _validate_witness,
    count_solutions,
    smt_verify,
    verify,
)


def small_problem(seed=0, n=None, horizon=None, kappa=None, planted=False):
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(2, 5))
    raw = rng.integers(0, 4, size=(n, n)) + np.eye(n, dtype=int)
    w = InfluenceMatrix.from_rows([
        [Fraction(int(v), int(row.sum())) for v in row] for row in raw])
    grid = AbstractGrid(d_x=2, d_lambda=2, w_ab=w)
    horizon = horizon if horizon is not None else int(rng.integers(1, 5))
    if planted:
        cfg = AbstractConfig(
            init_indices=tuple(int(v) for v in rng.integers(0, 2, n)),
            lambda_levels=tuple(int(v) for v in rng.integers(0, 3, n)),
            grid=grid)
        obs = cfg.simulate(horizon).outputs
    else:
        obs = rng.integers(0, 2, size=(horizon + 1, n))
    kappa = kappa if kappa is not None else Fraction(int(rng.integers(0, 3)), n)
    spec = ObservationSpec(observed=np.asarray(obs, dtype=np.uint8), kappa=kappa)
    return VerificationProblem(spec=spec, space=SearchSpace.full(grid, n), delta=0.0)


# ---------------------------------------------------------------- encoding


def test_script_is_deterministic_and_shaped():
    problem = small_problem(3)
    a = encode_smtlib(problem)
    b = encode_smtlib(problem)
    assert a == b
    assert a.startswith("(set-logic QF_LIRA)")
    assert a.rstrip().endswith("(get-model)")
    n = problem.spec.n
    for i in range(n):
        assert f"init_{i}" in a and f"lam_{i}" in a
    assert "b_0_0" in a and "x_0_0" in a
    assert count_real_vars(a) > 0


def test_degenerate_space_script():
    # single grid value and single level per agent: no free selections
    w = InfluenceMatrix.from_rows([[1.0]])
    grid = AbstractGrid(d_x=1, d_lambda=1, w_ab=w)
    space = SearchSpace(init_options=((0,),), level_options=((1,),), grid=grid)
    obs = np.array([[1], [1]], dtype=np.uint8)
    problem = VerificationProblem(
        spec=ObservationSpec(observed=obs, kappa=0), space=space)
    script = encode_smtlib(problem)
    assert "(assert (= init_0 0))" in script
    assert "(or" not in script.split("(check-sat)")[0].split("b_0_0")[0]


def test_blocking_clause_mentions_every_selection():
    problem = small_problem(5, n=3)
    cfg = problem.space.config_at(7)
    clause = blocking_clause(cfg)
    for i in range(3):
        assert f"(= init_{i} {cfg.init_indices[i]})" in clause
        assert f"(= lam_{i} {cfg.lambda_levels[i]})" in clause


def test_parse_define_fun_ints():
    text = '(model (define-fun init_0 () Int 1)\n (define-fun lam_3 () Int (- 2)))'
    assert parse_define_fun_ints(text) == {"init_0": 1, "lam_3": -2}


def test_model_values_roundtrip():
    problem = small_problem(7, n=2)
    cfg = problem.space.config_at(11)
    values = {f"init_{i}": cfg.init_indices[i] for i in range(2)}
    values |= {f"lam_{i}": cfg.lambda_levels[i] for i in range(2)}
    assert model_values_to_config(values, problem) == cfg


def test_validation_gate_rejects_bad_witness():
    problem = small_problem(0, n=2, horizon=2, kappa=0, planted=True)
    verdict = enumerate_verify(problem, witness_cap=None)
    non_witness = None
    for idx in range(problem.space.size()):
        cfg = problem.space.config_at(idx)
        if all(w != cfg for w in verdict.witnesses):
            non_witness = cfg
            break
    assert non_witness is not None
    with pytest.raises(ModelValidationError):
        _validate_witness(non_witness, problem, ToleranceMode.KAPPA)


# ---------------------------------------------------------------- solver io


@needs_solver
def test_run_solver_trivia():
    assert run_solver("(check-sat)").status == "sat"
    assert run_solver("(assert false)(check-sat)").status == "unsat"


@needs_solver
def test_run_solver_parses_models():
    res = run_solver("(declare-const v Int)(assert (= v 3))(check-sat)(get-model)")
    assert res.status == "sat"
    assert parse_define_fun_ints(res.model_text) == {"v": 3}


@needs_solver
def test_session_reset_and_reuse():
    with SmtSession() as sess:
        sess.assert_text("(declare-const p Bool)(assert p)")
        assert sess.check_sat() == "sat"
        sess.assert_text("(assert (not p))")
        assert sess.check_sat() == "unsat"
        sess.reset()
        assert sess.check_sat() == "sat"


@needs_solver
def test_session_timeout_kills_process():
    with SmtSession() as sess:
        with pytest.raises(SolverTimeout):
            # no sync marker will come back for an empty exchange window
            sess.exchange("(set-info :status unknown)", timeout_s=0.0001)
        assert sess.dead


# ------------------------------------------------------------ end-to-end smt


@needs_solver
def test_planted_problem_is_sat_with_valid_witness():
    problem = small_problem(1, n=3, horizon=3, kappa=0, planted=True)
    verdict = smt_verify(problem, ToleranceMode.KAPPA)
    assert verdict.status == "CONSISTENT"
    assert verdict.witnesses  # witness already passed the exact gate


@needs_solver
def test_forced_mismatch_is_unsat():
    problem = small_problem(2, n=2, horizon=2, kappa=0, planted=True)
    flipped = problem.spec.observed.copy()
    flipped[1] = 1 - flipped[1]
    bad = VerificationProblem(
        spec=ObservationSpec(observed=flipped, kappa=0),
        space=problem.space)
    sat_count = enumerate_verify(bad, witness_cap=None).count
    verdict = smt_verify(bad, ToleranceMode.KAPPA, count_all=True)
    assert verdict.count == sat_count


@needs_solver
def test_engine_agreement_and_exact_counts():
    with SmtSession() as sess:
        for seed in range(8):
            problem = small_problem(100 + seed, planted=(seed % 2 == 0))
            expected = enumerate_verify(problem, witness_cap=None)
            sess.reset()
            got = smt_verify(problem, ToleranceMode.KAPPA, session=sess, count_all=True)
            assert got.status == expected.status
            assert got.count == expected.count
            keys = {(w.init_indices, w.lambda_levels) for w in expected.witnesses}
            for w in got.witnesses:
                assert (w.init_indices, w.lambda_levels) in keys


@needs_solver
def test_verify_both_engine_dispatch():
    problem = small_problem(11, n=2, horizon=2, kappa=0, planted=True)
    verdict = verify(problem, engine="both", count_all=True)
    assert verdict.engine == "ENUMERATION"
    assert verdict.evidence["smt_status"] == verdict.status


# ------------------------------------------------------------------ counting


@needs_solver
def test_count_solutions_eps_lambda_semantics():
    problem = small_problem(21, n=2, horizon=3, kappa=0, planted=True)
    planted_levels = enumerate_verify(problem, witness_cap=None).witnesses[0]
    lam_hat = [float(v) for v in planted_levels.lambda_exact()]
    with SmtSession() as sess:
        prev = 0
        for eps in (0.0, 0.25, 0.5, 1.0):
            sess.reset()
            c = count_solutions(problem, lam_hat, eps, engine="both", session=sess)
            assert c >= prev  # nondecreasing in the constraint radius
            prev = c
        assert c >= 1
        sess.reset()
        unconstrained = count_solutions(problem, lam_hat, 1.0, engine="enum")
        assert c == unconstrained


def test_count_solutions_empty_restriction_is_zero():
    problem = small_problem(23, n=2, horizon=2, kappa=0)
    assert count_solutions(problem, [0.5, 0.5], 0.1, engine="enum") == 0


def test_count_disagreement_raises(monkeypatch):
    problem = small_problem(25, n=2, horizon=1, kappa=0, planted=True)

    def fake_smt(*args, **kwargs):
        from fjverify.search import Verdict
        return Verdict(status="INCONSISTENT", engine="SMT", count=12345)

    monkeypatch.setattr("fjverify.verify.smt_verify", fake_smt)
    with pytest.raises(EngineDisagreement):
        count_solutions(problem, [1.0, 1.0], 1.0, engine="both")
