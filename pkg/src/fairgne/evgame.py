"""Electric-vehicle charging game builders.

Agents charge by u_i toward a desired final charge under battery leakage
A_i and charging efficiency B_i, paying a congestion charge that is
affine in total demand.  The shared budget keeps the aggregate charge
scarce.  Four named scenarios with fixed default parameters back the
reproduction experiments:

    baseline         three symmetric agents
    scaling          baseline costs rescaled per agent by (1, 2, 3)
    initial_charge   baseline with initial charges (0, 0.25, 0.5)
    transformed_cost tracking terms replaced by quadratic / log / exp gaps
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams, UnknownScenario
from .model import (
    LOG_Z_MIN,
    AgentSpec,
    EvQuadratic,
    ExponentialGap,
    FeasibleSet,
    GameModel,
    LogPlusQuadratic,
    PureQuadraticGap,
    Transformation,
    apply_transformation,
)

SCENARIOS = ("baseline", "scaling", "initial_charge", "transformed_cost")

# Scenario defaults: symmetric tracking toward a unit reference with a
# binding unit budget.
_Q = 1.0
_RHO0 = 0.05
_RHO1 = 0.1
_Z_REF = 1.0
_BUDGET = 1.0
_SCALING_VECTOR = (1.0, 2.0, 3.0)
_SHIFTED_Z_INIT = (0.0, 0.25, 0.5)


def _as_vector(value, m: int, name: str) -> tuple[float, ...]:
    if np.isscalar(value):
        return tuple(float(value) for _ in range(m))
    vec = tuple(float(v) for v in value)
    if len(vec) != m:
        raise InvalidParams(f"{name} must have length {m}, got {len(vec)}")
    return vec


@dataclass(frozen=True)
class EvParams:
    """Charging-game parameters; scalars broadcast to all agents."""

    M: int
    q: tuple[float, ...] = _Q
    A: tuple[float, ...] = 1.0
    B: tuple[float, ...] = 1.0
    z_init: tuple[float, ...] = 0.0
    z_ref: tuple[float, ...] = _Z_REF
    rho0: tuple[float, ...] = _RHO0
    rho1: tuple[float, ...] = _RHO1
    U_bar: float = _BUDGET

    def __post_init__(self):
        if self.M < 1:
            raise InvalidParams(f"M must be >= 1, got {self.M}")
        for name in ("q", "A", "B", "z_init", "z_ref", "rho0", "rho1"):
            object.__setattr__(self, name, _as_vector(getattr(self, name), self.M, name))
        if self.U_bar <= 0.0:
            raise InvalidParams(f"U_bar must be positive, got {self.U_bar}")
        for i in range(self.M):
            if self.q[i] <= 0.0:
                raise InvalidParams(f"q[{i}] must be positive, got {self.q[i]}")
            if not 0.0 <= self.A[i] <= 1.0:
                raise InvalidParams(f"A[{i}] must be in [0, 1], got {self.A[i]}")
            if not 0.0 < self.B[i] <= 1.0:
                raise InvalidParams(f"B[{i}] must be in (0, 1], got {self.B[i]}")
            if self.z_init[i] < 0.0:
                raise InvalidParams(f"z_init[{i}] must be nonnegative")
            if self.z_ref[i] <= 0.0:
                raise InvalidParams(f"z_ref[{i}] must be positive")
            if self.rho0[i] <= 0.0:
                raise InvalidParams(f"rho0[{i}] must be positive, got {self.rho0[i]}")
            if self.rho1[i] < 0.0:
                raise InvalidParams(f"rho1[{i}] must be nonnegative, got {self.rho1[i]}")
            if self.q[i] * self.B[i] ** 2 + self.rho1[i] <= 0.0:
                raise InvalidParams(f"agent {i} lacks strong convexity in its decision")

    def is_scarce(self) -> bool:
        """Whether the budget cannot charge every agent to its reference."""
        desired = sum(
            (self.z_ref[i] - self.A[i] * self.z_init[i]) / self.B[i]
            for i in range(self.M)
        )
        return self.U_bar < desired


def build_ev_game(p: EvParams) -> GameModel:
    """Quadratic-tracking game with the exact affine pseudo-gradient."""
    agents = tuple(
        AgentSpec(
            EvQuadratic(
                q=p.q[i],
                A=p.A[i],
                B=p.B[i],
                z_init=p.z_init[i],
                z_ref=p.z_ref[i],
                rho0=p.rho0[i],
                rho1=p.rho1[i],
            )
        )
        for i in range(p.M)
    )
    feasible = FeasibleSet.nonnegative(p.M, p.U_bar)
    return GameModel.build(agents, feasible)


def baseline_params(m: int = 3) -> EvParams:
    return EvParams(M=m)


def two_agent_baseline() -> GameModel:
    """Two symmetric agents sharing one unit of charge."""
    return build_ev_game(baseline_params(2))


def _transformed_cost_game() -> GameModel:
    common = dict(A=1.0, B=1.0, z_init=0.0, rho0=_RHO0, rho1=_RHO1)
    agents = (
        AgentSpec(PureQuadraticGap(gap_ref=_BUDGET, **common)),
        AgentSpec(LogPlusQuadratic(C=_BUDGET, weight=0.1, gap_ref=_BUDGET, **common)),
        AgentSpec(ExponentialGap(gap_ref=_BUDGET, **common)),
    )
    # The log agent's lower bound keeps its charge state inside the
    # logarithm's domain.
    lower = np.array([0.0, LOG_Z_MIN, 0.0])
    return GameModel.build(agents, FeasibleSet(lower, _BUDGET))


def scenario(name: str) -> GameModel:
    """Build a named scenario game; names are stable CLI identifiers."""
    if name == "baseline":
        return build_ev_game(baseline_params())
    if name == "scaling":
        base = build_ev_game(baseline_params())
        return apply_transformation(
            base, Transformation.cnc(_SCALING_VECTOR, (0.0, 0.0, 0.0))
        )
    if name == "initial_charge":
        return build_ev_game(EvParams(M=3, z_init=_SHIFTED_Z_INIT))
    if name == "transformed_cost":
        return _transformed_cost_game()
    raise UnknownScenario(
        f"unknown scenario {name!r}; expected one of {', '.join(SCENARIOS)}"
    )
