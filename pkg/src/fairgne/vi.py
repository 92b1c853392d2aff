"""Monotone variational inequalities over a capped nonnegative orthant.

Two routes to a solution of  (x - x*)' F(x*) >= 0  for all x in
{u >= lb, w'u <= budget}:

* ``solve_vi``: extragradient iteration with backtracking step selection,
  valid for any continuous monotone operator (no Lipschitz constant
  required).
* ``solve_affine_vi_active_set``: exact KKT solve by active-set
  enumeration, for affine F(u) = M u + m with positive definite symmetric
  part; exists as an oracle for small problems, not production scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionTooLarge,
    InfeasibleSet,
    InvalidParams,
    NoConvergence,
    NoValidPattern,
)
from .model import FeasibleSet

_ACTIVE_SET_MAX_N = 20
_PATTERN_TOL = 1e-12


@dataclass(frozen=True)
class SolverParams:
    """Knobs for the extragradient solver.

    ``tol`` bounds the natural residual ||x - P(x - F(x))||.  ``seed``
    drives the randomized feasible starting point, making runs
    reproducible per seed.
    """

    max_iters: int = 100_000
    tol: float = 1e-10
    initial_step: float = 1.0
    step_backtrack: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidParams(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol <= 0.0:
            raise InvalidParams(f"tol must be positive, got {self.tol}")
        if self.initial_step <= 0.0:
            raise InvalidParams(f"initial_step must be positive, got {self.initial_step}")
        if not 0.0 < self.step_backtrack < 1.0:
            raise InvalidParams(
                f"step_backtrack must be in (0, 1), got {self.step_backtrack}"
            )


@dataclass(frozen=True)
class ViSolution:
    x: np.ndarray
    natural_residual: float
    iterations: int
    converged: bool
    step_history_summary: tuple[float, float, float]


def project_feasible(p, fs: FeasibleSet) -> np.ndarray:
    """Euclidean projection onto {u >= lb, w'u <= budget}.

    Clamp to the lower bounds; if the budget already holds, done.
    Otherwise the projection is u(tau) = max(lb, p - tau*w) for the unique
    tau >= 0 with w'u(tau) = budget, found exactly by sorting the
    breakpoints tau_i = (p_i - lb_i)/w_i, O(n log n).
    """
    p = np.asarray(p, dtype=float)
    lb = fs.lower_bounds
    w = fs.budget_weights
    budget = fs.budget
    if float(w @ lb) > budget:
        raise InfeasibleSet("weighted lower bounds exceed the budget")

    u = np.maximum(p, lb)
    if float(w @ u) <= budget:
        return u

    # Walk breakpoints in increasing tau.  On each segment
    # phi(tau) = w'u(tau) is linear with slope -sum of w_i^2 over
    # coordinates still above their bound.
    bp = (p - lb) / w
    order = np.argsort(bp, kind="stable")
    above = bp > 0.0  # coordinates not yet clamped at tau = 0
    lin = float(np.sum(w[above] * p[above]) + np.sum(w[~above] * lb[~above]))
    slope = float(np.sum(w[above] ** 2))
    tau_lo = 0.0
    tau = None
    for k in order:
        if bp[k] <= 0.0:
            continue
        # candidate crossing on [tau_lo, bp[k]]
        if slope > 0.0:
            cand = (lin - budget) / slope
            if cand <= bp[k]:
                tau = max(cand, tau_lo)
                break
        # move past breakpoint k: coordinate k clamps to its bound
        lin += float(w[k] * lb[k] - w[k] * p[k])
        slope -= float(w[k] ** 2)
        tau_lo = bp[k]
    if tau is None:
        tau = tau_lo  # all coordinates clamped; w'lb <= budget holds

    u = np.maximum(lb, p - tau * w)
    # Rounding can leave w'u a few ulps above the budget; Newton-correct on
    # the final segment so the returned point passes the same feasibility
    # check used at entry (this makes the projection exactly idempotent).
    for _ in range(10):
        excess = float(w @ u) - budget
        if excess <= 0.0:
            break
        free = u > lb
        denom = float(np.sum(w[free] ** 2))
        if denom == 0.0:
            u = lb.copy()
            break
        new_tau = tau + excess / denom
        if new_tau == tau:
            break  # correction below one ulp of tau; finish coordinatewise
        tau = new_tau
        u = np.maximum(lb, p - tau * w)
    # Remove any last sub-ulp excess from the freest coordinate directly.
    for _ in range(200):
        excess = float(w @ u) - budget
        if excess <= 0.0:
            break
        free_idx = np.flatnonzero(u > lb)
        if free_idx.size == 0:
            break  # u == lb and w'lb <= budget was validated above
        j = free_idx[int(np.argmax(u[free_idx] - lb[free_idx]))]
        nudged = u[j] - excess / float(w[j])
        if nudged >= u[j]:
            nudged = np.nextafter(u[j], -np.inf)
        u[j] = max(float(lb[j]), float(nudged))
    return u


def natural_residual(F_value, x, fs: FeasibleSet) -> float:
    """||x - P(x - F(x))||_2; zero exactly at VI solutions."""
    x = np.asarray(x, dtype=float)
    gap = x - project_feasible(x - np.asarray(F_value, dtype=float), fs)
    return float(np.linalg.norm(gap))


def solve_vi(F, fs: FeasibleSet, params: SolverParams | None = None) -> ViSolution:
    """Extragradient iteration with backtracking step selection.

    ``F`` maps an n-vector to an n-vector and must be continuous and
    monotone on the set (caller responsibility; see
    ``monotonicity_certificate``).  Each iteration takes the trial point
    y = P(x - g F(x)), shrinks g until g*||F(x) - F(y)|| <= 0.9*||x - y||,
    then updates x = P(x - g F(y)).  The step may grow back one backtrack
    level per iteration, capped at ``initial_step``.

    Deterministic given ``params.seed`` and the inputs.  Raises
    ``NoConvergence`` after ``max_iters`` iterations above tolerance,
    which can signal a non-monotone operator.
    """
    params = params or SolverParams()
    rng = np.random.default_rng(params.seed)
    x = project_feasible(fs.lower_bounds + rng.random(fs.n), fs)

    gamma = params.initial_step
    step_min = np.inf
    step_max = 0.0
    steps_taken = 0
    residual = np.inf

    for it in range(params.max_iters):
        fx = np.asarray(F(x), dtype=float)
        residual = float(np.linalg.norm(x - project_feasible(x - fx, fs)))
        if residual <= params.tol:
            if steps_taken == 0:
                summary = (0.0, 0.0, 0.0)
            else:
                summary = (step_min, step_max, gamma)
            return ViSolution(x, residual, it, True, summary)

        gamma = min(gamma / params.step_backtrack, params.initial_step)
        while True:
            y = project_feasible(x - gamma * fx, fs)
            dist = float(np.linalg.norm(x - y))
            if dist == 0.0:
                # x is a fixed point of the projected step yet the natural
                # residual is above tolerance: the iteration cannot move.
                raise NoConvergence(it, residual, "extragradient stalled")
            fy = np.asarray(F(y), dtype=float)
            if gamma * float(np.linalg.norm(fx - fy)) <= 0.9 * dist:
                break
            gamma *= params.step_backtrack
            if gamma < 1e-18:
                raise NoConvergence(it, residual, "step size underflow")
        x = project_feasible(x - gamma * fy, fs)
        steps_taken += 1
        step_min = min(step_min, gamma)
        step_max = max(step_max, gamma)

    raise NoConvergence(params.max_iters, residual)


def kkt_residual(F_value, x, lam: float, mu, fs: FeasibleSet) -> float:
    """Worst violation of the uniform-multiplier KKT system.

    Takes the max of the stationarity gap ||F + lam*w - mu||_inf, the two
    complementarity products, multiplier negativity, and primal
    feasibility violations.
    """
    F_value = np.asarray(F_value, dtype=float)
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    w = fs.budget_weights
    lb = fs.lower_bounds

    stationarity = float(np.max(np.abs(F_value + lam * w - mu)))
    budget_gap = float(w @ x) - fs.budget
    comp_budget = abs(lam * budget_gap)
    comp_bounds = float(np.max(np.abs(mu * (x - lb))))
    neg_lam = max(0.0, -lam)
    neg_mu = float(np.max(np.maximum(-mu, 0.0)))
    infeas = max(0.0, budget_gap, float(np.max(lb - x)))
    return max(stationarity, comp_budget, comp_bounds, neg_lam, neg_mu, infeas)


@dataclass(frozen=True)
class AffineViSolution(ViSolution):
    """Active-set oracle output; carries the exact multipliers."""

    lam: float = 0.0
    mu: np.ndarray | None = None
    budget_active: bool = False


def solve_affine_vi_active_set(M, m, fs: FeasibleSet) -> AffineViSolution:
    """Exact VI solve for affine F(u) = M u + m by active-set enumeration.

    Tries every pattern {each lower bound active or not} x {budget active
    or not} in lexicographic order (bound bitmask ascending, budget
    inactive before active), solves the square KKT system
    M x + m + lam*w - mu = 0 under the pattern's complementarity, and
    returns the first pattern whose solution satisfies u >= lb, lam >= 0,
    mu >= 0 within 1e-12.  Requires the symmetric part of M to be positive
    definite for uniqueness; degenerate ties are accepted by every pattern
    that produces them, and the lexicographic order keeps the result
    deterministic.
    """
    M = np.asarray(M, dtype=float)
    m = np.asarray(m, dtype=float)
    n = fs.n
    if n > _ACTIVE_SET_MAX_N:
        raise DimensionTooLarge(
            f"active-set enumeration capped at n <= {_ACTIVE_SET_MAX_N}, got {n}"
        )
    if M.shape != (n, n) or m.shape != (n,):
        raise InvalidParams("operator shape does not match the feasible set")

    lb = fs.lower_bounds
    w = fs.budget_weights
    budget = fs.budget
    patterns_tried = 0

    for mask in range(2**n):
        bound_active = np.array([(mask >> i) & 1 == 1 for i in range(n)])
        free = ~bound_active
        for budget_active in (False, True):
            patterns_tried += 1
            x = lb.copy()
            lam = 0.0
            nf = int(np.sum(free))
            try:
                if budget_active:
                    if nf == 0:
                        if abs(float(w @ lb) - budget) > _PATTERN_TOL:
                            continue
                    else:
                        kkt = np.zeros((nf + 1, nf + 1))
                        kkt[:nf, :nf] = M[np.ix_(free, free)]
                        kkt[:nf, nf] = w[free]
                        kkt[nf, :nf] = w[free]
                        rhs = np.zeros(nf + 1)
                        rhs[:nf] = -m[free] - M[np.ix_(free, bound_active)] @ lb[bound_active]
                        rhs[nf] = budget - float(w[bound_active] @ lb[bound_active])
                        sol = np.linalg.solve(kkt, rhs)
                        x[free] = sol[:nf]
                        lam = float(sol[nf])
                elif nf > 0:
                    rhs = -m[free] - M[np.ix_(free, bound_active)] @ lb[bound_active]
                    x[free] = np.linalg.solve(M[np.ix_(free, free)], rhs)
            except np.linalg.LinAlgError:
                continue

            mu = np.where(bound_active, M @ x + m + lam * w, 0.0)
            feasible = (
                bool(np.all(x[free] >= lb[free] - _PATTERN_TOL))
                and lam >= -_PATTERN_TOL
                and bool(np.all(mu >= -_PATTERN_TOL))
                and float(w @ x) <= budget + _PATTERN_TOL
            )
            if not feasible:
                continue

            res = natural_residual(M @ x + m, x, fs)
            return AffineViSolution(
                x=x,
                natural_residual=res,
                iterations=patterns_tried,
                converged=True,
                step_history_summary=(0.0, 0.0, 0.0),
                lam=max(lam, 0.0),
                mu=np.maximum(mu, 0.0),
                budget_active=budget_active,
            )

    raise NoValidPattern(
        "no active-set pattern satisfies the KKT system; "
        "check monotonicity of the operator"
    )
