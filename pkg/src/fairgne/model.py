"""Game definitions: cost functions, feasible set, pseudo-gradients, transformations.

Every agent controls a scalar charging decision u_i.  A cost function is a
tracking term in the charge state z_i = A_i*z_init_i + B_i*u_i plus a
congestion charge u_i*(rho1_i*sum(u) + rho0_i).  Agent-level affine
rescalings (scale, offset) are stored as metadata on the agent instead of
wrapping closures, so the affine form of the pseudo-gradient stays exact
under transformations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, InvalidParams, InvalidWeights, NotAffine

# Charge states below this are outside the logarithmic cost's domain.
LOG_Z_MIN = 1e-9


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise InvalidParams(msg)


@dataclass(frozen=True)
class _ChargingCost:
    """Shared chassis: charge-state map and congestion charge.

    Subclasses provide tracking_cost(z) and tracking_slope(z), the
    derivative of the tracking term with respect to z.
    """

    A: float = 1.0
    B: float = 1.0
    z_init: float = 0.0
    rho0: float = 0.05
    rho1: float = 0.1

    def _validate_chassis(self) -> None:
        _check(0.0 <= self.A <= 1.0, f"A must be in [0, 1], got {self.A}")
        _check(0.0 < self.B <= 1.0, f"B must be in (0, 1], got {self.B}")
        _check(self.z_init >= 0.0, f"z_init must be nonnegative, got {self.z_init}")
        _check(self.rho0 > 0.0, f"rho0 must be positive, got {self.rho0}")
        _check(self.rho1 >= 0.0, f"rho1 must be nonnegative, got {self.rho1}")

    def charge_state(self, u_i: float) -> float:
        return self.A * self.z_init + self.B * u_i

    def cost(self, u_i: float, total_u: float) -> float:
        z = self.charge_state(u_i)
        return self.tracking_cost(z) + u_i * (self.rho1 * total_u + self.rho0)

    def grad(self, u_i: float, total_u: float) -> float:
        z = self.charge_state(u_i)
        congestion = self.rho1 * (total_u + u_i) + self.rho0
        return self.B * self.tracking_slope(z) + congestion

    def tracking_cost(self, z: float) -> float:
        raise NotImplementedError

    def tracking_slope(self, z: float) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class EvQuadratic(_ChargingCost):
    """Quadratic tracking toward a reference charge: q*(z_ref - z)^2."""

    q: float = 1.0
    z_ref: float = 1.0

    def __post_init__(self):
        self._validate_chassis()
        _check(self.q > 0.0, f"q must be positive, got {self.q}")

    def tracking_cost(self, z: float) -> float:
        return self.q * (self.z_ref - z) ** 2

    def tracking_slope(self, z: float) -> float:
        return -2.0 * self.q * (self.z_ref - z)


@dataclass(frozen=True)
class PureQuadraticGap(_ChargingCost):
    """Unweighted quadratic shortfall from a gap reference: (gap_ref - z)^2."""

    gap_ref: float = 1.0

    def __post_init__(self):
        self._validate_chassis()

    def tracking_cost(self, z: float) -> float:
        return (self.gap_ref - z) ** 2

    def tracking_slope(self, z: float) -> float:
        return -2.0 * (self.gap_ref - z)


@dataclass(frozen=True)
class LogPlusQuadratic(_ChargingCost):
    """log(C/z) plus a weighted quadratic shortfall.

    Only defined for z >= LOG_Z_MIN; solvers keep iterates interior by
    raising the lower bound of the corresponding coordinate.
    """

    C: float = 1.0
    weight: float = 0.1
    gap_ref: float = 1.0

    def __post_init__(self):
        self._validate_chassis()
        _check(self.C > 0.0, f"C must be positive, got {self.C}")
        _check(self.weight >= 0.0, f"weight must be nonnegative, got {self.weight}")

    def tracking_cost(self, z: float) -> float:
        if z < LOG_Z_MIN:
            raise DomainError(f"log cost undefined at charge state z={z:.3e}")
        return math.log(self.C) - math.log(z) + self.weight * (self.gap_ref - z) ** 2

    def tracking_slope(self, z: float) -> float:
        if z < LOG_Z_MIN:
            raise DomainError(f"log cost undefined at charge state z={z:.3e}")
        return -1.0 / z - 2.0 * self.weight * (self.gap_ref - z)


@dataclass(frozen=True)
class ExponentialGap(_ChargingCost):
    """Exponential shortfall penalty exp(gap_ref - z) - 1, total on the reals."""

    gap_ref: float = 1.0

    def __post_init__(self):
        self._validate_chassis()

    def tracking_cost(self, z: float) -> float:
        return math.exp(self.gap_ref - z) - 1.0

    def tracking_slope(self, z: float) -> float:
        return -math.exp(self.gap_ref - z)


CostFunction = _ChargingCost


@dataclass(frozen=True)
class AgentSpec:
    """One agent: its cost, decision dimension, and affine rescaling metadata.

    ``scale`` and ``offset`` realize the agent's cost as
    scale * J_i(x) + offset.  Scales must be strictly positive so the
    agent's best responses are unaffected.
    """

    cost: CostFunction
    dim: int = 1
    scale: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        _check(self.dim >= 1, f"dim must be >= 1, got {self.dim}")
        _check(self.scale > 0.0, f"scale must be positive, got {self.scale}")


@dataclass(frozen=True, eq=False)
class FeasibleSet:
    """Jointly convex set {u : u >= lower_bounds, budget_weights' u <= budget}."""

    lower_bounds: np.ndarray
    budget: float
    budget_weights: np.ndarray

    def __init__(self, lower_bounds, budget: float, budget_weights=None):
        lb = np.atleast_1d(np.asarray(lower_bounds, dtype=float)).copy()
        if budget_weights is None:
            w = np.ones_like(lb)
        else:
            w = np.atleast_1d(np.asarray(budget_weights, dtype=float)).copy()
        _check(budget > 0.0, f"budget must be positive, got {budget}")
        _check(w.shape == lb.shape, "budget_weights and lower_bounds size mismatch")
        _check(bool(np.all(w > 0.0)), "budget_weights must be strictly positive")
        _check(bool(np.all(lb >= 0.0)), "lower_bounds must be nonnegative")
        _check(
            float(w @ lb) <= budget,
            "empty feasible set: weighted lower bounds exceed the budget",
        )
        lb.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "lower_bounds", lb)
        object.__setattr__(self, "budget", float(budget))
        object.__setattr__(self, "budget_weights", w)

    @classmethod
    def nonnegative(cls, n: int, budget: float) -> "FeasibleSet":
        """Orthant with a unit-weight budget: {u >= 0, sum(u) <= budget}."""
        return cls(np.zeros(n), budget)

    @property
    def n(self) -> int:
        return self.lower_bounds.size

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(
            np.all(x >= self.lower_bounds - tol)
            and float(self.budget_weights @ x) <= self.budget + tol
        )


@dataclass(frozen=True)
class Transformation:
    """Positive affine rescaling of agents' costs.

    kind "CNC": per-agent scale a_i and offset b_i.
    kind "CUC": one shared scale a, per-agent offsets b_i.
    kind "CFC": one shared scale a and one shared offset b.
    """

    kind: str
    a: tuple | float
    b: tuple | float

    KINDS = ("CNC", "CUC", "CFC")

    def __post_init__(self):
        _check(self.kind in self.KINDS, f"unknown transformation kind {self.kind!r}")

    @classmethod
    def cnc(cls, a, b) -> "Transformation":
        return cls("CNC", tuple(float(v) for v in a), tuple(float(v) for v in b))

    @classmethod
    def cuc(cls, a: float, b) -> "Transformation":
        return cls("CUC", float(a), tuple(float(v) for v in b))

    @classmethod
    def cfc(cls, a: float, b: float) -> "Transformation":
        return cls("CFC", float(a), float(b))

    def expand(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-agent (scale, offset) vectors for a game with m agents."""
        if self.kind == "CNC":
            a = np.asarray(self.a, dtype=float)
            b = np.asarray(self.b, dtype=float)
        elif self.kind == "CUC":
            a = np.full(m, float(self.a))
            b = np.asarray(self.b, dtype=float)
        else:  # CFC
            a = np.full(m, float(self.a))
            b = np.full(m, float(self.b))
        _check(a.size == m, f"{self.kind} scale length {a.size} != {m} agents")
        _check(b.size == m, f"{self.kind} offset length {b.size} != {m} agents")
        _check(bool(np.all(a > 0.0)), "transformation scales must be strictly positive")
        return a, b


def derive_affine_form(agents) -> tuple[np.ndarray, np.ndarray] | None:
    """Exact (M_F, m_F) with F(u) = M_F u + m_F, if every cost is EvQuadratic.

    Row i is the gradient of agent i's (scaled) cost: diagonal
    2*(q_i B_i^2 + rho1_i), off-diagonal rho1_i, constant
    -2 q_i B_i (z_ref_i - A_i z_init_i) + rho0_i, all times the agent scale.
    """
    if not all(isinstance(a.cost, EvQuadratic) for a in agents):
        return None
    m = len(agents)
    mat = np.zeros((m, m))
    vec = np.zeros(m)
    for i, agent in enumerate(agents):
        c = agent.cost
        s = agent.scale
        row = np.full(m, s * c.rho1)
        row[i] = s * 2.0 * (c.q * c.B * c.B + c.rho1)
        mat[i] = row
        dz = c.z_ref - c.A * c.z_init
        vec[i] = s * (-2.0 * c.q * c.B * dz + c.rho0)
    return mat, vec


@dataclass(frozen=True, eq=False)
class GameModel:
    """Agents plus the shared feasible set; immutable after construction."""

    agents: tuple[AgentSpec, ...]
    feasible: FeasibleSet
    affine_form: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        agents = tuple(self.agents)
        object.__setattr__(self, "agents", agents)
        _check(len(agents) >= 1, "a game needs at least one agent")
        _check(
            all(a.dim == 1 for a in agents),
            "scalar cost kinds support decision dimension 1 only",
        )
        _check(
            self.feasible.n == len(agents),
            f"feasible set size {self.feasible.n} != {len(agents)} agents",
        )
        if self.affine_form is not None:
            mat = np.asarray(self.affine_form[0], dtype=float).copy()
            vec = np.asarray(self.affine_form[1], dtype=float).copy()
            n = len(agents)
            _check(mat.shape == (n, n), "affine_form matrix shape mismatch")
            _check(vec.shape == (n,), "affine_form vector shape mismatch")
            mat.setflags(write=False)
            vec.setflags(write=False)
            object.__setattr__(self, "affine_form", (mat, vec))

    @classmethod
    def build(cls, agents, feasible: FeasibleSet) -> "GameModel":
        """Construct a game, deriving the exact affine form when available."""
        agents = tuple(agents)
        return cls(agents, feasible, derive_affine_form(agents))

    @property
    def num_agents(self) -> int:
        return len(self.agents)

    @property
    def n(self) -> int:
        return len(self.agents)


@dataclass(frozen=True)
class MonotonicityCertificate:
    """Least eigenvalue of the symmetric part of the affine operator matrix."""

    min_eigenvalue: float
    strongly_monotone: bool


def eval_cost(game: GameModel, i: int, x) -> float:
    """Agent i's transformation-adjusted cost scale*J_i(x) + offset."""
    x = np.asarray(x, dtype=float)
    agent = game.agents[i]
    j = agent.cost.cost(float(x[i]), float(np.sum(x)))
    return agent.scale * j + agent.offset


def pseudo_gradient(game: GameModel, x) -> np.ndarray:
    """Stacked own-decision partial gradients, scale-adjusted; offsets vanish."""
    x = np.asarray(x, dtype=float)
    total = float(np.sum(x))
    out = np.empty(game.n)
    for i, agent in enumerate(game.agents):
        out[i] = agent.scale * agent.cost.grad(float(x[i]), total)
    return out


def weighted_pseudo_gradient(game: GameModel, x, r) -> np.ndarray:
    """Blockwise r_i-weighted pseudo-gradient."""
    r = np.asarray(r, dtype=float)
    if r.shape != (game.n,) or not np.all(r > 0.0):
        raise InvalidWeights(
            f"weights must be {game.n} strictly positive reals, got {r!r}"
        )
    return r * pseudo_gradient(game, x)


def apply_transformation(game: GameModel, t: Transformation) -> GameModel:
    """New game whose agent scales and offsets are composed with t.

    Composition on agent i: scale' = a_i*scale, offset' = a_i*offset + b_i,
    so costs read a_i*(old cost) + b_i.  The original game is unchanged.
    """
    a, b = t.expand(game.num_agents)
    agents = tuple(
        replace(
            agent,
            scale=float(a[i]) * agent.scale,
            offset=float(a[i]) * agent.offset + float(b[i]),
        )
        for i, agent in enumerate(game.agents)
    )
    affine = derive_affine_form(agents) if game.affine_form is not None else None
    return GameModel(agents, game.feasible, affine)


def weighted_affine_form(game: GameModel, r) -> tuple[np.ndarray, np.ndarray]:
    """Affine form of the r-weighted operator: (diag(r) M_F, diag(r) m_F)."""
    if game.affine_form is None:
        raise NotAffine("game has no affine pseudo-gradient representation")
    r = np.asarray(r, dtype=float)
    mat, vec = game.affine_form
    return r[:, None] * mat, r * vec


def monotonicity_certificate(game: GameModel, r=None) -> MonotonicityCertificate:
    """Report the least eigenvalue of the symmetric part of M_F.

    With weights r the certificate covers the r-weighted operator, whose
    symmetric part can lose definiteness even when the unweighted one is
    positive definite.
    """
    if game.affine_form is None:
        raise NotAffine("monotonicity certificate requires an affine_form")
    if r is None:
        mat = game.affine_form[0]
    else:
        mat = weighted_affine_form(game, r)[0]
    sym = 0.5 * (mat + mat.T)
    lam_min = float(np.linalg.eigvalsh(sym)[0])
    return MonotonicityCertificate(lam_min, lam_min > 0.0)
