"""SMT-LIB2 encodings of finite-family consistency problems.

One script per (problem, tolerance mode): bounded integer selection
variables ``init_i`` and ``lam_i`` pick each agent's initial grid value and
stubbornness level, real variables ``x_i_t`` carry the unrolled dynamics
with exact rational constants, Boolean indicators ``b_i_t`` mirror the
threshold outputs, and each step constrains the mismatch count against
``floor(tolerance * n)`` (sound because Hamming distances are multiples of
1/n). Scripts are deterministic byte-for-byte for a given problem.

Two generators exist: the full encoding over all n agents, and a reduced
encoding that pins known stubborn agents and replaces each (community,
initial value) group by one representative state. When the influence matrix
is block-constant the weighted row sums are factored through per-community
partial sums, which keeps the simplex tableau sparse.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .abstraction import AbstractConfig
from .dynamics import as_fraction
from .reduction import GroupReduction, stubborn_output_bits
from .search import ToleranceMode, VerificationProblem

LOGIC = "QF_LIRA"


def _rat(q) -> str:
    q = as_fraction(q)
    if q < 0:
        return f"(- {_rat(-q)})"
    if q.denominator == 1:
        return str(q.numerator)
    return f"(/ {q.numerator} {q.denominator})"


def _domain_constraint(name: str, options) -> str:
    if len(options) == 1:
        return f"(assert (= {name} {options[0]}))"
    return "(assert (or " + " ".join(f"(= {name} {k})" for k in options) + "))"


class _Script:
    def __init__(self):
        self.lines: list[str] = []

    def add(self, line: str):
        self.lines.append(line)

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def _emit_selections(s: _Script, agents, space):
    for i in agents:
        s.add(f"(declare-const init_{i} Int)")
        s.add(_domain_constraint(f"init_{i}", space.init_options[i]))
    for i in agents:
        s.add(f"(declare-const lam_{i} Int)")
        s.add(_domain_constraint(f"lam_{i}", space.level_options[i]))


def _emit_init_values(s: _Script, agents, space, grid_vals):
    for i in agents:
        opts = space.init_options[i]
        if len(opts) == 1:
            s.add(f"(assert (= x_{i}_0 {_rat(grid_vals[opts[0]])}))")
        else:
            for k in opts:
                s.add(f"(assert (=> (= init_{i} {k}) (= x_{i}_0 {_rat(grid_vals[k])})))")


def _emit_level_guards(s: _Script, i: int, t: int, options, levels, sum_term: str):
    """x_i_{t+1} under each admissible stubbornness level of agent i."""
    for k in options:
        lev = levels[k]
        if lev == 0:
            rhs = sum_term
        elif lev == 1:
            rhs = f"x_{i}_0"
        else:
            rhs = f"(+ (* {_rat(1 - lev)} {sum_term}) (* {_rat(lev)} x_{i}_0))"
        if len(options) == 1:
            s.add(f"(assert (= x_{i}_{t + 1} {rhs}))")
        else:
            s.add(f"(assert (=> (= lam_{i} {k}) (= x_{i}_{t + 1} {rhs})))")


def _emit_step_tolerance(s: _Script, t: int, agents, observed_row, budget: int):
    """Mismatch-count constraint for one step; skipped when vacuous."""
    if budget < 0:
        s.add("(assert false)")
        return
    if budget >= len(agents):
        s.add(f"; step {t}: tolerance covers every agent, no constraint")
        return
    if budget == 0:
        for i in agents:
            lit = f"b_{i}_{t}" if observed_row[i] == 1 else f"(not b_{i}_{t})"
            s.add(f"(assert {lit})")
        return
    terms = []
    for i in agents:
        if observed_row[i] == 1:
            terms.append(f"(ite b_{i}_{t} 0 1)")
        else:
            terms.append(f"(ite b_{i}_{t} 1 0)")
    s.add(f"(assert (<= (+ {' '.join(terms)}) {budget}))")


def encode_smtlib(
    problem: VerificationProblem,
    tolerance_mode: ToleranceMode = ToleranceMode.KAPPA,
    include_check: bool = True,
) -> str:
    """Full encoding over all agents. Ends with (check-sat)(get-model) unless
    ``include_check`` is off (session drivers issue those themselves)."""
    space = problem.space
    grid = space.grid
    spec = problem.spec
    n = spec.n
    horizon = spec.horizon
    budget = problem.mismatch_budget(tolerance_mode)
    gamma = as_fraction(problem.gamma)
    grid_vals = grid.grid_values()
    levels = grid.levels()
    w = grid.w_ab
    agents = range(n)

    s = _Script()
    s.add(f"(set-logic {LOGIC})")
    s.add(f"; agents={n} horizon={horizon} mode={tolerance_mode.value} "
          f"budget={budget} d_x={grid.d_x} d_lambda={grid.d_lambda}")
    _emit_selections(s, agents, space)
    for t in range(horizon + 1):
        for i in agents:
            s.add(f"(declare-const x_{i}_{t} Real)")
    _emit_init_values(s, agents, space, grid_vals)

    block = w.block
    comm = block.community_of(n) if block is not None else None
    for t in range(horizon):
        if block is not None:
            for c in range(block.k):
                members = " ".join(f"x_{j}_{t}" for j in agents if comm[j] == c)
                s.add(f"(declare-const cs_{c}_{t} Real)")
                s.add(f"(assert (= cs_{c}_{t} (+ {members})))" if members.count(" ") else
                      f"(assert (= cs_{c}_{t} {members or '0'}))")
        for i in agents:
            s.add(f"(declare-const s_{i}_{t} Real)")
            if block is not None:
                ci = int(comm[i])
                terms = []
                for c in range(block.k):
                    v = block.values[ci][c]
                    if v == 0:
                        continue
                    if c == ci:
                        terms.append(f"(* {_rat(v)} (- cs_{c}_{t} x_{i}_{t}))")
                    else:
                        terms.append(f"(* {_rat(v)} cs_{c}_{t})")
            else:
                terms = [
                    f"(* {_rat(w.exact[i][j])} x_{j}_{t})"
                    for j in agents if w.exact[i][j] != 0
                ]
            if not terms:
                s.add(f"(assert (= s_{i}_{t} 0))")
            elif len(terms) == 1:
                s.add(f"(assert (= s_{i}_{t} {terms[0]}))")
            else:
                s.add(f"(assert (= s_{i}_{t} (+ {' '.join(terms)})))")
            _emit_level_guards(s, i, t, space.level_options[i], levels, f"s_{i}_{t}")

    for t in range(horizon + 1):
        for i in agents:
            s.add(f"(declare-const b_{i}_{t} Bool)")
            s.add(f"(assert (= b_{i}_{t} (>= x_{i}_{t} {_rat(gamma)})))")
    for t in range(horizon + 1):
        _emit_step_tolerance(s, t, list(agents), spec.observed[t], budget)

    if include_check:
        s.add("(check-sat)")
        s.add("(get-model)")
    return s.text()


def encode_reduced_smtlib(
    problem: VerificationProblem,
    reduction: GroupReduction,
    tolerance_mode: ToleranceMode = ToleranceMode.KAPPA,
    include_check: bool = True,
) -> str:
    """Reduced encoding: free agents plus one constant state per stubborn group.

    Stubborn agents contribute precomputed constant output bits to each
    step's mismatch budget and aggregated constant influence terms to the
    free agents' dynamics. Requires block-constant influence weights.
    """
    space = problem.space
    grid = space.grid
    if grid.w_ab.block is None:
        raise ValueError("the reduced encoding needs block-constant influence weights")
    block = grid.w_ab.block
    spec = problem.spec
    n = spec.n
    comm = block.community_of(n)
    horizon = spec.horizon
    budget = problem.mismatch_budget(tolerance_mode)
    gamma = as_fraction(problem.gamma)
    grid_vals = grid.grid_values()
    levels = grid.levels()
    free = list(reduction.free)
    groups = reduction.groups
    stub_bits = stubborn_output_bits(reduction, gamma)

    s = _Script()
    s.add(f"(set-logic {LOGIC})")
    s.add(f"; reduced encoding: free={len(free)} groups={len(groups)} of n={n} "
          f"horizon={horizon} mode={tolerance_mode.value} budget={budget}")
    _emit_selections(s, free, space)
    for t in range(horizon + 1):
        for i in free:
            s.add(f"(declare-const x_{i}_{t} Real)")
        for gi, g in enumerate(groups):
            s.add(f"(declare-const xg_{gi}_{t} Real)")
            s.add(f"(assert (= xg_{gi}_{t} {_rat(g.value)}))")
    _emit_init_values(s, free, space, grid_vals)

    for t in range(horizon):
        for c in range(block.k):
            members = " ".join(f"x_{j}_{t}" for j in free if comm[j] == c)
            s.add(f"(declare-const cs_{c}_{t} Real)")
            if not members:
                s.add(f"(assert (= cs_{c}_{t} 0))")
            elif " " not in members:
                s.add(f"(assert (= cs_{c}_{t} {members}))")
            else:
                s.add(f"(assert (= cs_{c}_{t} (+ {members})))")
        for i in free:
            ci = int(comm[i])
            terms = []
            for c in range(block.k):
                v = block.values[ci][c]
                if v == 0:
                    continue
                if c == ci:
                    terms.append(f"(* {_rat(v)} (- cs_{c}_{t} x_{i}_{t}))")
                else:
                    terms.append(f"(* {_rat(v)} cs_{c}_{t})")
            for gi, g in enumerate(groups):
                v = block.values[ci][g.community] * len(g.members)
                if v != 0:
                    terms.append(f"(* {_rat(v)} xg_{gi}_{t})")
            s.add(f"(declare-const s_{i}_{t} Real)")
            s.add(f"(assert (= s_{i}_{t} (+ {' '.join(terms)})))")
            _emit_level_guards(s, i, t, space.level_options[i], levels, f"s_{i}_{t}")

    for t in range(horizon + 1):
        for i in free:
            s.add(f"(declare-const b_{i}_{t} Bool)")
            s.add(f"(assert (= b_{i}_{t} (>= x_{i}_{t} {_rat(gamma)})))")
    for t in range(horizon + 1):
        base = sum(1 for i, bit in stub_bits.items() if bit != int(spec.observed[t][i]))
        s.add(f"; step {t}: {base} constant mismatches from stubborn agents")
        _emit_step_tolerance(s, t, free, spec.observed[t], budget - base)

    if include_check:
        s.add("(check-sat)")
        s.add("(get-model)")
    return s.text()


def selection_names(problem: VerificationProblem,
                    reduction: GroupReduction | None = None) -> list[str]:
    agents = list(reduction.free) if reduction is not None else list(range(problem.spec.n))
    return [f"init_{i}" for i in agents] + [f"lam_{i}" for i in agents]


def model_values_to_config(values: dict[str, int], problem: VerificationProblem,
                           reduction: GroupReduction | None = None) -> AbstractConfig:
    """Assemble an AbstractConfig from solved selection variables.

    For reduced problems the pinned stubborn agents are filled in from the
    reduction (level = top grid level, i.e. stubbornness one).
    """
    grid = problem.grid
    n = problem.spec.n
    init = [None] * n
    lev = [None] * n
    agents = list(reduction.free) if reduction is not None else list(range(n))
    for i in agents:
        init[i] = values[f"init_{i}"]
        lev[i] = values[f"lam_{i}"]
    if reduction is not None:
        for g in reduction.groups:
            for i in g.members:
                init[i] = g.init_index
                lev[i] = grid.d_lambda
    if any(v is None for v in init) or any(v is None for v in lev):
        raise ValueError("model does not cover every agent")
    return AbstractConfig(init_indices=tuple(init), lambda_levels=tuple(lev), grid=grid)


def blocking_clause(config: AbstractConfig,
                    reduction: GroupReduction | None = None) -> str:
    """Exclude one full discrete assignment (over the encoded agents)."""
    agents = list(reduction.free) if reduction is not None else list(range(config.n))
    eqs = [f"(= init_{i} {config.init_indices[i]})" for i in agents]
    eqs += [f"(= lam_{i} {config.lambda_levels[i]})" for i in agents]
    return "(assert (not (and " + " ".join(eqs) + ")))"


def count_real_vars(script: str) -> int:
    return sum(1 for line in script.splitlines()
               if line.startswith("(declare-const") and line.rstrip().endswith("Real)"))
