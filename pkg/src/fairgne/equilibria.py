"""Equilibrium computation and verification.

Membership in the equilibrium set is certified agent by agent through
best responses.  Solutions are computed through the variational route:
the plain pseudo-gradient gives the uniform-multiplier equilibrium, the
r-weighted pseudo-gradient traces out the weighted (normalized)
equilibria whose per-agent budget multipliers satisfy r_i * lambda_i
constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FairGneError, InfeasibleResidual, InvalidWeights, NotStationary
from .model import (
    EvQuadratic,
    GameModel,
    PureQuadraticGap,
    eval_cost,
    pseudo_gradient,
    weighted_affine_form,
    weighted_pseudo_gradient,
)
from .vi import (
    SolverParams,
    kkt_residual,
    solve_affine_vi_active_set,
    solve_vi,
)

# Below this slack the budget constraint is treated as active.
_ACTIVE_TOL = 1e-8
# Coordinates within this distance of their lower bound count as bound-active.
_BOUND_TOL = 1e-9

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    """Joint decision with recovered multipliers and diagnostics.

    ``lambda_per_agent`` are the per-agent budget multipliers of the
    agent-wise KKT systems; ``uniform_lambda`` is the single multiplier of
    the (weighted) variational system.  With weights r they are related by
    lambda_i = uniform_lambda / r_i.
    """

    x: np.ndarray
    lambda_per_agent: np.ndarray
    uniform_lambda: float | None
    r_weights: np.ndarray | None
    kkt_residual: float
    is_vgne: bool
    converged: bool
    iterations: int = 0


@dataclass(frozen=True)
class GneCheck:
    verdict: bool
    max_improvement: float
    per_agent_gaps: np.ndarray


@dataclass(frozen=True, eq=False)
class GneSample:
    """One weighted-equilibrium grid point; failures are kept, not dropped."""

    r: np.ndarray
    result: EquilibriumResult | None
    converged: bool
    strict_complementarity: bool | None
    failure: str | None = None


@dataclass(frozen=True)
class RecoveredMultipliers:
    lambda_per_agent: np.ndarray
    mu: np.ndarray


def _golden_section(f, lo: float, hi: float, width: float = 1e-12) -> float:
    """Minimize a unimodal f on [lo, hi] to the given interval width."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > width:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def best_response(game: GameModel, i: int, x) -> float:
    """Agent i's optimal decision with the other entries of x held fixed.

    The feasible interval is [lb_i, (budget - sum_{j!=i} w_j x_j) / w_i].
    Quadratic tracking costs admit a closed-form clamped vertex; the
    logarithmic and exponential kinds fall back to golden-section search
    at 1e-12 interval width.
    """
    x = np.asarray(x, dtype=float)
    fs = game.feasible
    w = fs.budget_weights
    lb_i = float(fs.lower_bounds[i])
    others = float(fs.budget - (w @ x - w[i] * x[i]))
    cap = others / float(w[i])
    if cap < lb_i - 1e-12:
        raise InfeasibleResidual(
            f"agents other than {i} exhaust the budget below its lower bound"
        )
    cap = max(cap, lb_i)

    cost = game.agents[i].cost
    others_sum = float(np.sum(x) - x[i])
    if isinstance(cost, (EvQuadratic, PureQuadraticGap)):
        q = cost.q if isinstance(cost, EvQuadratic) else 1.0
        ref = cost.z_ref if isinstance(cost, EvQuadratic) else cost.gap_ref
        dz = ref - cost.A * cost.z_init
        curvature = 2.0 * (q * cost.B * cost.B + cost.rho1)
        constant = cost.rho1 * others_sum + cost.rho0 - 2.0 * q * cost.B * dz
        vertex = -constant / curvature
        return float(min(max(vertex, lb_i), cap))

    if cap - lb_i <= 1e-12:
        return lb_i

    def objective(u_i: float) -> float:
        return cost.cost(u_i, others_sum + u_i)

    return _golden_section(objective, lb_i, cap)


def is_gne(game: GameModel, x, tol: float) -> GneCheck:
    """Best-response check of equilibrium membership.

    Gap i is J_i(x) minus agent i's best achievable cost against the
    others; the verdict holds when no agent can improve by more than tol.
    """
    x = np.asarray(x, dtype=float)
    gaps = np.empty(game.num_agents)
    for i in range(game.num_agents):
        br = best_response(game, i, x)
        x_dev = x.copy()
        x_dev[i] = br
        gaps[i] = eval_cost(game, i, x) - eval_cost(game, i, x_dev)
    worst = float(np.max(gaps))
    return GneCheck(worst <= tol, worst, gaps)


def _uniform_multiplier(F_value, x, fs):
    """Single budget multiplier and bound multipliers from stationarity.

    With the budget slack, complementarity forces lambda = 0.  Otherwise
    lambda is the least-squares fit of F_i + lambda*w_i = 0 over the
    coordinates away from their bounds; bound-active coordinates absorb
    the remainder into mu >= 0.
    """
    F_value = np.asarray(F_value, dtype=float)
    x = np.asarray(x, dtype=float)
    w = fs.budget_weights
    lb = fs.lower_bounds
    slack = fs.budget - float(w @ x)
    at_bound = x <= lb + _BOUND_TOL
    if slack > _ACTIVE_TOL:
        lam = 0.0
    else:
        free = ~at_bound
        if np.any(free):
            lam = float(w[free] @ (-F_value[free]) / (w[free] @ w[free]))
        else:
            lam = float(np.max(-F_value / w))
        lam = max(lam, 0.0)
    mu = np.where(at_bound, np.maximum(F_value + lam * w, 0.0), 0.0)
    return lam, mu


def _solve_weighted(game: GameModel, r: np.ndarray, params: SolverParams):
    """Solve the r-weighted variational system; returns (x, iterations).

    Affine games up to the enumeration bound go through the exact
    active-set oracle whenever the weighted operator still has a positive
    definite symmetric part; everything else runs the extragradient
    iteration (which may legitimately fail for non-monotone weighted
    operators).
    """
    fs = game.feasible
    if game.affine_form is not None and game.n <= 20:
        mat, vec = weighted_affine_form(game, r)
        sym_min = float(np.linalg.eigvalsh(0.5 * (mat + mat.T))[0])
        if sym_min > 0.0:
            sol = solve_affine_vi_active_set(mat, vec, fs)
            return sol.x, sol.iterations
    sol = solve_vi(lambda u: weighted_pseudo_gradient(game, u, r), fs, params)
    return sol.x, sol.iterations


def _weighted_result(game: GameModel, r: np.ndarray, params: SolverParams):
    x, iterations = _solve_weighted(game, r, params)
    fr = weighted_pseudo_gradient(game, x, r)
    lam_r, mu_r = _uniform_multiplier(fr, x, game.feasible)
    res = kkt_residual(fr, x, lam_r, mu_r, game.feasible)
    lam_agents = lam_r / r
    spread = float(np.max(lam_agents) - np.min(lam_agents))
    return EquilibriumResult(
        x=x,
        lambda_per_agent=lam_agents,
        uniform_lambda=lam_r,
        r_weights=r.copy(),
        kkt_residual=res,
        is_vgne=spread <= 1e-6,
        converged=True,
        iterations=iterations,
    )


def solve_vgne(game: GameModel, params: SolverParams | None = None) -> EquilibriumResult:
    """Uniform-multiplier equilibrium: the variational solution with r = 1."""
    params = params or SolverParams()
    r = np.ones(game.num_agents)
    return _weighted_result(game, r, params)


def solve_normalized(
    game: GameModel, r, params: SolverParams | None = None
) -> EquilibriumResult:
    """Weighted equilibrium for strictly positive weights r.

    The recovered per-agent multipliers satisfy lambda_i = lambda_r / r_i,
    so r_i * lambda_i is constant across agents.  Weights are used as
    given; scaling r by a positive constant leaves the solution unchanged.
    """
    params = params or SolverParams()
    r = np.asarray(r, dtype=float)
    if r.shape != (game.num_agents,) or not np.all(r > 0.0):
        raise InvalidWeights(
            f"need {game.num_agents} strictly positive weights, got {r!r}"
        )
    return _weighted_result(game, r, params)


def recover_multipliers(game: GameModel, x) -> RecoveredMultipliers:
    """Per-agent KKT multipliers at a feasible point.

    Interior coordinates with the budget active give
    lambda_i = -grad_i / w_i; with the budget slack complementarity pins
    lambda_i = 0.  Bound-active coordinates return the nonnegative
    (lambda_i, mu_i) pair splitting the stationarity residual.  Raises
    ``NotStationary`` when some agent's residual cannot be brought below
    1e-6 by any nonnegative pair.
    """
    x = np.asarray(x, dtype=float)
    fs = game.feasible
    grad = pseudo_gradient(game, x)
    w = fs.budget_weights
    lb = fs.lower_bounds
    budget_active = fs.budget - float(w @ x) <= _ACTIVE_TOL

    m = game.num_agents
    lam = np.zeros(m)
    mu = np.zeros(m)
    for i in range(m):
        interior = x[i] > lb[i] + _BOUND_TOL
        if interior:
            if budget_active:
                lam[i] = max(0.0, -grad[i] / w[i])
            mu[i] = 0.0
        else:
            if budget_active:
                lam[i] = max(0.0, -grad[i] / w[i])
            mu[i] = max(0.0, grad[i] + lam[i] * w[i])
        residual = abs(grad[i] + lam[i] * w[i] - mu[i])
        if residual > 1e-6:
            raise NotStationary(
                f"agent {i} stationarity residual {residual:.3e} exceeds 1e-6"
            )
    return RecoveredMultipliers(lam, mu)


def gne_set_sample(
    game: GameModel, grid, params: SolverParams | None = None
) -> list[GneSample]:
    """Weighted equilibria over a grid of weight vectors.

    Each weight vector is normalized to sum to the number of agents
    before solving.  Failed points are recorded in place, never dropped,
    and each converged point carries its strict-complementarity flag
    (budget active implies every lambda_i > 1e-8).
    """
    params = params or SolverParams()
    m = game.num_agents
    samples: list[GneSample] = []
    for raw in grid:
        r = np.asarray(raw, dtype=float)
        if r.shape != (m,) or not np.all(r > 0.0):
            raise InvalidWeights(f"grid entry {raw!r} is not {m} positive reals")
        r = r * (m / float(np.sum(r)))
        try:
            result = solve_normalized(game, r, params)
        except FairGneError as exc:  # record per-point failure, keep sweeping
            samples.append(GneSample(r, None, False, None, f"{type(exc).__name__}: {exc}"))
            continue
        w = game.feasible.budget_weights
        active = game.feasible.budget - float(w @ result.x) <= _ACTIVE_TOL
        strict = (not active) or bool(np.all(result.lambda_per_agent > 1e-8))
        samples.append(GneSample(r, result, result.converged, strict))
    return samples
