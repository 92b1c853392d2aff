"""Generalized Nash equilibria of budget-coupled games.

Computes uniform-multiplier (variational) and weighted (normalized)
equilibria of convex games coupled through one separable budget
constraint, audits their invariance under positive affine cost
rescalings, and selects equilibria by fairness criteria.
"""

__version__ = "0.1.0"

from .errors import (
    AllPointsFailed,
    DimensionTooLarge,
    DomainError,
    FairGneError,
    InfeasibleResidual,
    InfeasibleSet,
    InvalidParams,
    InvalidWeights,
    MissingBenchmark,
    NoConvergence,
    NotAffine,
    NotStationary,
    NoValidPattern,
    ParseError,
    UnknownScenario,
    ValidationError,
)
from .model import (
    AgentSpec,
    CostFunction,
    EvQuadratic,
    ExponentialGap,
    FeasibleSet,
    GameModel,
    LogPlusQuadratic,
    MonotonicityCertificate,
    PureQuadraticGap,
    Transformation,
    apply_transformation,
    derive_affine_form,
    eval_cost,
    monotonicity_certificate,
    pseudo_gradient,
    weighted_affine_form,
    weighted_pseudo_gradient,
)
from .vi import (
    AffineViSolution,
    SolverParams,
    ViSolution,
    kkt_residual,
    natural_residual,
    project_feasible,
    solve_affine_vi_active_set,
    solve_vi,
)
from .equilibria import (
    EquilibriumResult,
    GneCheck,
    GneSample,
    RecoveredMultipliers,
    best_response,
    gne_set_sample,
    is_gne,
    recover_multipliers,
    solve_normalized,
    solve_vgne,
)
from .fairness import (
    FairnessMetric,
    FgneResult,
    ProfileRow,
    agent_costs,
    fairness_profile,
    fairness_value,
    resolve_benchmark_costs,
    simplex_weight_grid,
    solve_fgne,
)
from .evgame import (
    SCENARIOS,
    EvParams,
    baseline_params,
    build_ev_game,
    scenario,
    two_agent_baseline,
)

__all__ = [name for name in dir() if not name.startswith("_")]
