"""Verification toolkit for threshold-observed Friedkin-Johnsen dynamics.

Simulate opinion dynamics seen only through per-agent binary outputs, build
finite abstractions over parameter grids, certify that an abstraction tracks
the concrete system within a distance delta, and decide whether any model in
a parameter family is consistent with an observed binary sequence -- by
exhaustive enumeration and by SMT solving.
"""

from .abstraction import (
    AbstractConfig,
    AbstractGrid,
    ModelConfig,
    ParameterBox,
    SimulationCertificate,
    certify_simulation,
    check_near_threshold_budget,
    check_one_step_error_bound,
    cover_indices,
    levels_within,
    near_threshold_indices,
    snap_config,
    snap_initial,
    snap_stubbornness,
    step_error_budget,
    uniform_error_bound,
)
from .dynamics import (
    AugmentedState,
    BlockStructure,
    InfluenceMatrix,
    StubbornnessVector,
    Trajectory,
    contraction_factor,
    fj_step,
    hamming,
    quantize,
    simulate,
    simulate_exact,
    spectral_norm,
)
from .enumeration import enumerate_verify
from .network import (
    Adjacency,
    SbmParams,
    block_weighted_adjacency,
    expected_adjacency,
    row_normalize,
    sbm_generate,
    split_communities,
    weight_error,
)
from .observation import (
    ObservationSpec,
    load_observations_csv,
    load_observations_json,
    predicate_value,
    robustness,
    satisfies,
)
from .reduction import GroupReduction, group_reduce
from .search import SearchSpace, ToleranceMode, Verdict, VerificationProblem
from .smt import encode_reduced_smtlib, encode_smtlib
from .solver import SmtSession, SolverConfig, discover_solver, have_solver, run_solver
from .verify import count_solutions, smt_verify, transfer_verdict, verify, verify_box

__version__ = "0.1.0"
