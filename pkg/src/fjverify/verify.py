"""Verification pipelines: engine dispatch, counting, and verdict transfer.

Two engines answer the same question -- does any configuration in the finite
family reproduce the observations within tolerance? Exhaustive enumeration
is the exact oracle for small spaces; the SMT engine scales past it. Every
SAT model is validated by exact rational re-simulation before it is trusted
(a failed gate is an encoder bug and raises, never a silent wrong answer).

Consistency over a continuous configuration box transfers through the
abstraction with a delta margin: if every covering abstract configuration
violates the observations at tolerance kappa + delta, all concrete
configurations in the box violate them at kappa; if some covering
configuration satisfies them at kappa - delta and keeps few agents near the
output threshold, a consistent concrete configuration exists. Anything in
between stays INCONCLUSIVE, as does a solver timeout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .abstraction import (
    AbstractConfig,
    AbstractGrid,
    ModelConfig,
    ParameterBox,
    check_near_threshold_budget,
    contraction_factor,
    levels_within,
    step_error_budget,
)
from .dynamics import StubbornnessVector, as_fraction
from .enumeration import DEFAULT_WITNESS_CAP, _exact_consistent, enumerate_verify
from .observation import ObservationSpec
from .reduction import GroupReduction
from .search import SearchSpace, ToleranceMode, Verdict, VerificationProblem
from .smt import (
    blocking_clause,
    encode_reduced_smtlib,
    encode_smtlib,
    model_values_to_config,
    selection_names,
)
from .solver import SmtSession, SolverConfig, SolverTimeout


class EngineDisagreement(AssertionError):
    pass


class ModelValidationError(RuntimeError):
    """A solver model failed exact re-simulation: the encoding is wrong."""


def _validate_witness(config: AbstractConfig, problem: VerificationProblem,
                      mode: ToleranceMode) -> None:
    ok = _exact_consistent(
        config, problem.spec.observed, problem.mismatch_budget(mode),
        problem.spec.horizon, as_fraction(problem.gamma))
    if not ok:
        raise ModelValidationError(
            f"solver witness fails exact re-simulation at {mode.value}: {config}")


def smt_verify(
    problem: VerificationProblem,
    tolerance_mode: ToleranceMode = ToleranceMode.KAPPA,
    solver: SolverConfig | str | None = None,
    session: SmtSession | None = None,
    timeout_s: float = 300,
    count_all: bool = False,
    witness_cap: int = DEFAULT_WITNESS_CAP,
    accept=None,
    max_models: int | None = None,
    reduction: GroupReduction | None = None,
) -> Verdict:
    """Decide the problem with the external solver.

    Stops at the first witness unless ``count_all`` (exhausts the space via
    blocking clauses; the count is then exact) or ``accept`` (keeps pulling
    models until one satisfies the callback) ask for more. Witnesses pass
    the exact re-simulation gate before being returned.
    """
    if reduction is not None:
        script = encode_reduced_smtlib(problem, reduction, tolerance_mode, include_check=False)
    else:
        script = encode_smtlib(problem, tolerance_mode, include_check=False)
    names = selection_names(problem, reduction)
    own_session = session is None
    sess = session or SmtSession(solver)
    witnesses: list[AbstractConfig] = []
    accepted_at: int | None = None
    notices: list[str] = []
    models = 0
    try:
        sess.assert_text(script, timeout_s=timeout_s)
        while True:
            try:
                status = sess.check_sat(timeout_s=timeout_s)
            except SolverTimeout:
                status = "timeout"
            if status in ("unknown", "timeout"):
                notices.append(f"solver returned {status}; verdict INCONCLUSIVE")
                return Verdict(status="INCONCLUSIVE", engine="SMT", witnesses=witnesses,
                               count=None, tolerance_mode=tolerance_mode, notices=notices)
            if status == "unsat":
                # the space was exhausted, so the model count is exact
                st = "INCONSISTENT" if models == 0 else "CONSISTENT"
                return Verdict(status=st, engine="SMT", witnesses=witnesses, count=models,
                               tolerance_mode=tolerance_mode, notices=notices,
                               evidence={"margin_witness": accepted_at})
            values = sess.get_int_values(names, timeout_s=timeout_s)
            config = model_values_to_config(values, problem, reduction)
            _validate_witness(config, problem, tolerance_mode)
            models += 1
            if len(witnesses) < witness_cap:
                witnesses.append(config)
            if accept is not None and accepted_at is None and accept(config):
                accepted_at = len(witnesses) - 1
                if not count_all:
                    return Verdict(status="CONSISTENT", engine="SMT", witnesses=witnesses,
                                   count=None, tolerance_mode=tolerance_mode, notices=notices,
                                   evidence={"margin_witness": accepted_at})
            if max_models is not None and models >= max_models:
                notices.append(f"stopped after {models} models (limit)")
                return Verdict(status="CONSISTENT", engine="SMT", witnesses=witnesses,
                               count=None, tolerance_mode=tolerance_mode, notices=notices,
                               evidence={"margin_witness": accepted_at})
            if not count_all and accept is None:
                return Verdict(status="CONSISTENT", engine="SMT", witnesses=witnesses,
                               count=None, tolerance_mode=tolerance_mode, notices=notices)
            sess.assert_text(blocking_clause(config, reduction), timeout_s=timeout_s)
    finally:
        if own_session:
            sess.close()


def verify(
    problem: VerificationProblem,
    tolerance_mode: ToleranceMode = ToleranceMode.KAPPA,
    engine: str = "enum",
    solver: SolverConfig | str | None = None,
    **kwargs,
) -> Verdict:
    """Dispatch to an engine; ``both`` cross-checks SMT against enumeration."""
    if engine == "enum":
        return enumerate_verify(problem, tolerance_mode,
                                space_cap=kwargs.get("space_cap", 10_000_000),
                                witness_cap=kwargs.get("witness_cap", DEFAULT_WITNESS_CAP))
    if engine == "smt":
        return smt_verify(problem, tolerance_mode, solver=solver,
                          **{k: v for k, v in kwargs.items() if k != "space_cap"})
    if engine == "both":
        ev = enumerate_verify(problem, tolerance_mode,
                              space_cap=kwargs.get("space_cap", 10_000_000))
        sv = smt_verify(problem, tolerance_mode, solver=solver,
                        count_all=kwargs.get("count_all", False))
        if ev.status != sv.status:
            raise EngineDisagreement(
                f"enumeration says {ev.status}, solver says {sv.status}")
        if sv.count is not None and ev.count != sv.count:
            raise EngineDisagreement(
                f"enumeration counts {ev.count}, solver counts {sv.count}")
        ev.notices.extend(sv.notices)
        ev.evidence["smt_status"] = sv.status
        return ev
    raise ValueError(f"unknown engine {engine!r}")


def count_solutions(
    problem: VerificationProblem,
    lambda_hat,
    eps_lambda,
    engine: str = "both",
    solver: SolverConfig | str | None = None,
    session: SmtSession | None = None,
    space_cap: int = 10_000_000,
    timeout_s: float = 300,
) -> int:
    """Number of satisfying assignments with every stubbornness level within
    eps_lambda of lambda_hat (diagonal spectral distance = max entry gap)."""
    try:
        allowed = levels_within(lambda_hat, eps_lambda, problem.grid)
        space = problem.space.restrict_levels(allowed)
    except ValueError:
        return 0
    restricted = VerificationProblem(spec=problem.spec, space=space,
                                     delta=problem.delta, gamma=problem.gamma)
    counts = {}
    if engine in ("enum", "both"):
        counts["enum"] = enumerate_verify(restricted, ToleranceMode.KAPPA,
                                          space_cap=space_cap).count
    if engine in ("smt", "both"):
        counts["smt"] = smt_verify(restricted, ToleranceMode.KAPPA, solver=solver,
                                   session=session, count_all=True,
                                   timeout_s=timeout_s).count
    if engine == "both" and counts["enum"] != counts["smt"]:
        raise EngineDisagreement(
            f"solution counts disagree: enumeration {counts['enum']}, solver {counts['smt']}")
    return counts.get("enum", counts.get("smt"))


def margin_checker(problem: VerificationProblem):
    """Near-threshold budget test applied to an abstract configuration's own
    trajectory (the second transfer direction requires it)."""
    horizon = problem.spec.horizon
    delta = problem.delta
    gamma = problem.gamma

    def check(config: AbstractConfig) -> bool:
        return check_near_threshold_budget(config.simulate(horizon, gamma), delta, gamma)

    return check


def transfer_verdict(problem: VerificationProblem, plus: Verdict,
                     minus: Verdict | None) -> Verdict:
    """Combine runs at kappa+delta and kappa-delta into a box-level verdict."""
    kappa = problem.spec.kappa
    delta = as_fraction(problem.delta)
    notices: list[str] = list(plus.notices)
    if plus.status == "INCONSISTENT":
        return Verdict(status="INCONSISTENT", engine=plus.engine, witnesses=[],
                       count=plus.count, tolerance_mode=ToleranceMode.KAPPA_PLUS_DELTA,
                       notices=notices,
                       evidence={"reason": "every covering abstraction violates "
                                           "the observations at kappa+delta"})
    if plus.status == "INCONCLUSIVE":
        notices.append("abstract run at kappa+delta was inconclusive")
        return Verdict(status="INCONCLUSIVE", engine=plus.engine, witnesses=[],
                       tolerance_mode=None, notices=notices)

    if kappa < delta:
        notices.append("kappa < delta: the kappa-delta direction is skipped "
                       "(the transfer argument assumes kappa >= delta)")
        minus = None
    if minus is None:
        return Verdict(status="INCONCLUSIVE", engine=plus.engine, witnesses=plus.witnesses,
                       tolerance_mode=ToleranceMode.KAPPA_PLUS_DELTA, notices=notices,
                       evidence={"reason": "satisfiable at kappa+delta only"})

    notices.extend(minus.notices)
    if minus.status == "CONSISTENT":
        check = margin_checker(problem)
        pre = minus.evidence.get("margin_witness")
        candidates = minus.witnesses if pre is None else [minus.witnesses[pre]]
        for config in candidates:
            if check(config):
                return Verdict(status="CONSISTENT", engine=minus.engine,
                               witnesses=[config], count=minus.count,
                               tolerance_mode=ToleranceMode.KAPPA_MINUS_DELTA,
                               notices=notices,
                               evidence={"reason": "an abstraction satisfies the "
                                                   "observations at kappa-delta with the "
                                                   "near-threshold budget holding"})
        notices.append("witnesses at kappa-delta exist but none passed the "
                       "near-threshold budget check")
    return Verdict(status="INCONCLUSIVE", engine=plus.engine, witnesses=plus.witnesses,
                   tolerance_mode=None, notices=notices,
                   evidence={"reason": "satisfiable at kappa+delta, no certified "
                                       "witness at kappa-delta"})


def sample_box_evidence(
    box: ParameterBox,
    grid: AbstractGrid,
    spec: ObservationSpec,
    delta: float,
    gamma: float = 0.5,
    samples: int = 100,
    seed: int = 0,
    w_true=None,
) -> dict:
    """Sampled membership evidence for a configuration box.

    The hypotheses behind the transfer verdict quantify over the whole box;
    the box is uncountable, so this reports sampled evidence only (documented
    as such, never as proof): contraction and near-threshold rates over
    `samples` draws, the strictest observed contraction factor, and the
    weight-error budget check eps_w < (1 - min rho) * delta using that
    strictest value (an over-approximation of the infimum, so conservative).
    """
    rng = np.random.default_rng(seed)
    w = w_true if w_true is not None else grid.w_ab
    rhos = []
    margin_ok = 0
    budget_ok = 0
    for _ in range(samples):
        x, lam_vals = box.sample(rng)
        lam = StubbornnessVector(lam_vals)
        rho = contraction_factor(lam, w)
        rhos.append(rho)
        config = ModelConfig(x_init=x, lam=lam, w=w)
        traj = config.simulate(spec.horizon, gamma)
        if check_near_threshold_budget(traj, delta, gamma):
            margin_ok += 1
        eps_x = step_error_budget(w, grid.d_lambda, grid.d_x, grid.eps_w)
        if rho < 1 and eps_x <= (1 - rho) * delta + 1e-12:
            budget_ok += 1
    min_rho = min(rhos)
    return {
        "kind": "sampled evidence",
        "samples": samples,
        "contractive_fraction": sum(1 for r in rhos if r < 1) / samples,
        "near_threshold_budget_fraction": margin_ok / samples,
        "budget_within_delta_fraction": budget_ok / samples,
        "min_rho": min_rho,
        "eps_w_budget_ok": grid.eps_w < (1 - min_rho) * delta if min_rho < 1 else False,
    }


def verify_box(
    spec: ObservationSpec,
    box: ParameterBox,
    grid: AbstractGrid,
    delta: float,
    gamma: float = 0.5,
    engine: str = "enum",
    solver: SolverConfig | str | None = None,
    space_cap: int = 10_000_000,
    evidence_samples: int = 100,
    evidence_seed: int = 0,
    timeout_s: float = 300,
    minus_probe_limit: int = 20,
) -> Verdict:
    """Full pipeline: cover the box, run both tolerance directions, transfer."""
    space = SearchSpace.from_box(box, grid)
    problem = VerificationProblem(spec=spec, space=space, delta=delta, gamma=gamma)
    kwargs = dict(solver=solver) if engine != "enum" else {}
    plus = verify(problem, ToleranceMode.KAPPA_PLUS_DELTA, engine=engine,
                  space_cap=space_cap, **kwargs)
    minus = None
    if plus.status == "CONSISTENT" and spec.kappa >= as_fraction(delta):
        if engine == "smt":
            minus = smt_verify(problem, ToleranceMode.KAPPA_MINUS_DELTA, solver=solver,
                               accept=margin_checker(problem), max_models=minus_probe_limit,
                               timeout_s=timeout_s)
        else:
            minus = enumerate_verify(problem, ToleranceMode.KAPPA_MINUS_DELTA,
                                     space_cap=space_cap)
    verdict = transfer_verdict(problem, plus, minus)
    verdict.evidence["box_membership"] = sample_box_evidence(
        box, grid, spec, delta, gamma, samples=evidence_samples, seed=evidence_seed)
    verdict.evidence["cover_size"] = space.size()
    return verdict
