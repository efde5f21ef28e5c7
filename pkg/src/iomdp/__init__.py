"""Solver toolkit for constrained average-reward MDPs whose state is
observed only intermittently: belief-space construction, truncated
occupancy-measure linear programs (primal and dual), randomized policy
extraction, Monte Carlo validation, and structural chain diagnostics."""

from .analysis import (
    AcoeCertificate,
    ChainDiagnostics,
    DriftCertificate,
    acoe_residuals,
    check_contraction,
    classify_chain,
    duality_gap,
    foster_drift,
    verify_nu_closed_form,
)
from .belief import (
    BeliefKernel,
    BeliefSpace,
    belief_update,
    build_belief_space,
    build_kernel,
    lift_cost,
    lift_reward,
)
from .errors import (
    DimensionMismatch,
    EmptyModel,
    ExplosionGuard,
    Infeasible,
    IomdpError,
    MissingArtifact,
    ModeRequired,
    NonStochasticRow,
    NotActionIndependent,
    NotOptimal,
    NotRecurrent,
    PolicyDomainMismatch,
    SingularChain,
    SingularSystem,
    StatusMismatch,
    Unbounded,
)
from .lp import (
    LinearProgram,
    LpSolution,
    OccupancyLp,
    Policy,
    build_dual,
    build_primal,
    build_reduced_primal,
    check_solution,
    evaluate_policy_exact,
    extract_policy,
    nu_closed_form,
    solve_lp,
)
from .mdp_core import (
    FiniteMdp,
    ValidationReport,
    load_model,
    save_model,
    stationary_distribution,
    validate_mdp,
)
from .sim import SimConfig, SimReport, empirical_age_law, simulate
from .wireless import wireless_model

__version__ = "0.1.0"
