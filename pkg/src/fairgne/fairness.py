"""Fairness metrics and fairness-optimal equilibrium selection.

All metrics are expressed as functions to MINIMIZE over per-agent costs:

    MM   max_i c_i
    SW   sum_i c_i
    NBS  -prod_i (benchmark_i - c_i)        (requires benchmark_i > c_i)
    AI   sum_i c_i^(1-alpha) / (1-alpha)    (alpha > 0, alpha != 1, c_i > 0)
    JI   -(sum c)^2 / (M * sum c^2)         (negated so smaller is fairer)

The selection problem minimizes a metric over the weighted-equilibrium
parameterization of the equilibrium set: a simplex grid of weight
vectors followed by a derivative-free pattern search in log-weight
space.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AllPointsFailed,
    DomainError,
    FairGneError,
    InvalidParams,
    MissingBenchmark,
)
from .equilibria import EquilibriumResult, GneSample, gne_set_sample, solve_normalized
from .model import GameModel, eval_cost
from .vi import SolverParams

METRIC_KINDS = ("MM", "SW", "NBS", "AI", "JI")

# Weight grids keep every coordinate at least this far from zero.
GRID_R_MIN = 0.1
# Pattern search halts once the log-space step reaches this width.
_REFINE_STEP_MIN = 2e-5
_REFINE_STEP_INIT = 0.25


@dataclass(frozen=True)
class FairnessMetric:
    """One of the five supported metrics, minimization convention.

    NBS needs a benchmark: either a joint decision (evaluated through the
    game at selection time, so cost rescalings transform it consistently)
    or explicit benchmark costs.  When neither is given the zero decision
    is used.
    """

    kind: str
    alpha: float | None = None
    benchmark: tuple[float, ...] | None = None
    benchmark_costs: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise InvalidParams(f"unknown metric kind {self.kind!r}")
        if self.kind == "AI":
            if self.alpha is None or self.alpha <= 0.0 or self.alpha == 1.0:
                raise InvalidParams("AI requires alpha > 0 with alpha != 1")
        if self.benchmark is not None:
            object.__setattr__(self, "benchmark", tuple(float(v) for v in self.benchmark))
        if self.benchmark_costs is not None:
            object.__setattr__(
                self, "benchmark_costs", tuple(float(v) for v in self.benchmark_costs)
            )

    @classmethod
    def maximin(cls) -> "FairnessMetric":
        return cls("MM")

    @classmethod
    def social_welfare(cls) -> "FairnessMetric":
        return cls("SW")

    @classmethod
    def nash_bargaining(cls, benchmark=None, benchmark_costs=None) -> "FairnessMetric":
        bm = None if benchmark is None else tuple(benchmark)
        bc = None if benchmark_costs is None else tuple(benchmark_costs)
        return cls("NBS", benchmark=bm, benchmark_costs=bc)

    @classmethod
    def alpha_fairness(cls, alpha: float) -> "FairnessMetric":
        return cls("AI", alpha=float(alpha))

    @classmethod
    def jain_index(cls) -> "FairnessMetric":
        return cls("JI")

    @property
    def label(self) -> str:
        if self.kind == "AI":
            return f"AI_{self.alpha:g}"
        return self.kind


def fairness_value(metric: FairnessMetric, costs, benchmark_costs=None) -> float:
    """Evaluate a metric on per-agent costs.

    ``benchmark_costs`` overrides any costs stored on the metric; NBS
    without either raises ``MissingBenchmark``.
    """
    c = np.asarray(costs, dtype=float)
    m = c.size
    if metric.kind == "MM":
        return float(np.max(c))
    if metric.kind == "SW":
        return float(np.sum(c))
    if metric.kind == "NBS":
        if benchmark_costs is None:
            benchmark_costs = metric.benchmark_costs
        if benchmark_costs is None:
            raise MissingBenchmark("NBS needs benchmark costs or a benchmark decision")
        bc = np.asarray(benchmark_costs, dtype=float)
        gains = bc - c
        if np.any(gains <= 0.0):
            raise DomainError(
                "NBS benchmark must strictly dominate the evaluated costs"
            )
        return float(-np.prod(gains))
    if metric.kind == "AI":
        if np.any(c <= 0.0):
            raise DomainError("AI requires strictly positive costs")
        return float(np.sum(c ** (1.0 - metric.alpha)) / (1.0 - metric.alpha))
    # JI
    sum_sq = float(np.sum(c * c))
    if sum_sq == 0.0:
        raise DomainError("JI undefined when all costs are zero")
    total = float(np.sum(c))
    return -(total * total) / (m * sum_sq)


def resolve_benchmark_costs(metric: FairnessMetric, game: GameModel) -> np.ndarray | None:
    """Benchmark costs for NBS, evaluated through the given game.

    Explicit costs win; a benchmark decision is priced by the game's own
    (possibly rescaled) costs; with neither, the zero decision is used.
    """
    if metric.kind != "NBS":
        return None
    if metric.benchmark_costs is not None:
        return np.asarray(metric.benchmark_costs, dtype=float)
    if metric.benchmark is not None:
        point = np.asarray(metric.benchmark, dtype=float)
    else:
        point = np.zeros(game.n)
    return np.array([eval_cost(game, i, point) for i in range(game.num_agents)])


def agent_costs(game: GameModel, x) -> np.ndarray:
    return np.array([eval_cost(game, i, x) for i in range(game.num_agents)])


def simplex_weight_grid(m: int, density: int, r_min: float = GRID_R_MIN) -> list[np.ndarray]:
    """Weight vectors summing to m with every coordinate >= r_min.

    For two agents: ``density`` evenly spaced points along the segment.
    For three or more: a simplex lattice with ``density`` points per edge.
    """
    if density < 3:
        raise InvalidParams(f"grid density must be >= 3, got {density}")
    if m == 1:
        return [np.ones(1)]
    if m == 2:
        r1 = np.linspace(r_min, 2.0 - r_min, density)
        return [np.array([v, 2.0 - v]) for v in r1]
    k = density - 1
    span = m * (1.0 - r_min)
    grid = []
    for combo in itertools.combinations(range(k + m - 1), m - 1):
        parts = []
        prev = -1
        for c in combo:
            parts.append(c - prev - 1)
            prev = c
        parts.append(k + m - 2 - prev)
        grid.append(r_min + span * np.asarray(parts, dtype=float) / k)
    return grid


def default_grid_density(m: int) -> int:
    if m <= 2:
        return 101
    if m == 3:
        return 15
    return 9


@dataclass(frozen=True, eq=False)
class FgneResult:
    """Fairness-selection incumbent plus the full deterministic trace."""

    r_star: np.ndarray
    x_star: np.ndarray
    f_star: float
    search_trace: list[tuple[np.ndarray, float, bool]]
    result: EquilibriumResult


def _evaluate_point(game, metric, bench, result: EquilibriumResult):
    costs = agent_costs(game, result.x)
    try:
        return fairness_value(metric, costs, bench), None
    except (DomainError, MissingBenchmark) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def solve_fgne(
    game: GameModel,
    metric: FairnessMetric,
    grid_density: int | None = None,
    refine_iters: int = 200,
    params: SolverParams | None = None,
) -> FgneResult:
    """Minimize a fairness metric over the weighted-equilibrium family.

    Stage one scores every converged grid equilibrium; stage two refines
    around the incumbent with a pattern search in log-weight space
    (coordinate polls, step halved on failure, at most ``refine_iters``
    rounds, final step below 1e-4).  Metric domain failures skip the
    point; ``AllPointsFailed`` is raised when nothing evaluates.
    Deterministic for fixed inputs.
    """
    params = params or SolverParams()
    m = game.num_agents
    density = default_grid_density(m) if grid_density is None else grid_density
    if density < 3:
        raise InvalidParams(f"grid density must be >= 3, got {density}")

    bench = resolve_benchmark_costs(metric, game)
    grid = simplex_weight_grid(m, density)
    samples = gne_set_sample(game, grid, params)

    trace: list[tuple[np.ndarray, float, bool]] = []
    best: tuple[float, np.ndarray, EquilibriumResult] | None = None
    any_solved = False
    for sample in samples:
        if not sample.converged:
            trace.append((sample.r, math.nan, False))
            continue
        any_solved = True
        value, _err = _evaluate_point(game, metric, bench, sample.result)
        if value is None:
            trace.append((sample.r, math.nan, False))
            continue
        trace.append((sample.r, value, True))
        if best is None or value < best[0]:
            best = (value, sample.r, sample.result)
    if best is None:
        if any_solved:
            raise DomainError(
                f"{metric.label} is undefined at every sampled equilibrium"
            )
        raise AllPointsFailed("no grid point converged")

    f_inc, r_inc, res_inc = best
    step = _REFINE_STEP_INIT
    for _ in range(refine_iters):
        moved = False
        candidates = []
        log_r = np.log(r_inc)
        for i in range(m):
            for sign in (1.0, -1.0):
                v = log_r.copy()
                v[i] += sign * step
                r_cand = np.exp(v)
                r_cand *= m / float(np.sum(r_cand))
                candidates.append(r_cand)
        for r_cand in candidates:
            try:
                result = solve_normalized(game, r_cand, params)
            except FairGneError:
                trace.append((r_cand, math.nan, False))
                continue
            value, _err = _evaluate_point(game, metric, bench, result)
            if value is None:
                trace.append((r_cand, math.nan, False))
                continue
            trace.append((r_cand, value, True))
            if value < f_inc:
                f_inc, r_inc, res_inc = value, r_cand, result
                moved = True
        if not moved:
            step *= 0.5
            if step < _REFINE_STEP_MIN:
                break

    return FgneResult(
        r_star=r_inc,
        x_star=res_inc.x,
        f_star=f_inc,
        search_trace=trace,
        result=res_inc,
    )


@dataclass(frozen=True, eq=False)
class ProfileRow:
    """One converged sample with its costs, multipliers, and metric values."""

    r: np.ndarray
    x: np.ndarray
    costs: np.ndarray
    lambdas: np.ndarray
    strict_complementarity: bool | None
    metric_values: dict[str, float | None] = field(default_factory=dict)


def fairness_profile(
    samples: list[GneSample], metrics: list[FairnessMetric], game: GameModel
) -> list[ProfileRow]:
    """Tabulate converged samples against a list of metrics.

    Metric domain failures show up as ``None`` in the corresponding cell
    rather than discarding the row.
    """
    benches = {m.label: resolve_benchmark_costs(m, game) for m in metrics}
    rows = []
    for sample in samples:
        if not sample.converged or sample.result is None:
            continue
        costs = agent_costs(game, sample.result.x)
        values: dict[str, float | None] = {}
        for metric in metrics:
            try:
                values[metric.label] = fairness_value(metric, costs, benches[metric.label])
            except (DomainError, MissingBenchmark):
                values[metric.label] = None
        rows.append(
            ProfileRow(
                r=sample.r,
                x=sample.result.x,
                costs=costs,
                lambdas=sample.result.lambda_per_agent,
                strict_complementarity=sample.strict_complementarity,
                metric_values=values,
            )
        )
    return rows
