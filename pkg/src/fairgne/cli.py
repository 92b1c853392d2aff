"""Configuration ingestion, experiment orchestration, and CSV emission.

Configuration documents are YAML with the following top-level schema
(exactly one of ``scenario`` and ``game`` must be present)::

    scenario: baseline | scaling | initial_charge | transformed_cost
    game:                  # inline charging-game parameters
      M: 3
      q: 1.0               # scalars broadcast; lists give per-agent values
      A: 1.0
      B: 1.0
      z_init: [0, 0, 0]
      z_ref: 1.0
      rho0: 0.05
      rho1: 0.1
      U_bar: 1.0
    solver:
      max_iters: 100000
      tol: 1.0e-10
      initial_step: 1.0
      step_backtrack: 0.5
      seed: 0
    metric:
      kind: MM | SW | NBS | AI | JI
      alpha: 2.0           # AI only
      benchmark: [0, 0]    # NBS: joint decision priced through the game
      benchmark_costs: []  # NBS: explicit costs (wins over benchmark)
    sweep:
      grid_density: 101    # omit for the per-size default
      refine_iters: 200
    output:
      directory: out
      emit_plots: false
    transformations:       # audit command; defaults cover CUC and CNC
      - {kind: CNC, a: [1, 2, 3], b: [0, 0, 0]}
      - {kind: CUC, a: 2.0, b: [0, 0, 0]}
      - {kind: CFC, a: 2.0, b: 1.0}

All CSV numerics are serialized with 12 significant digits, comma
delimited, header row always present.  Every run writes ``manifest.json``
recording the config hash, package version, and per-solve convergence
flags.  Exit codes: 0 success, 2 solver non-convergence, 3 invalid
configuration, 4 metric domain error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .errors import (
    AllPointsFailed,
    DomainError,
    FairGneError,
    InvalidParams,
    MissingBenchmark,
    NoConvergence,
    ParseError,
    UnknownScenario,
    ValidationError,
)
from .equilibria import gne_set_sample, solve_vgne
from .evgame import SCENARIOS, EvParams, build_ev_game, scenario, two_agent_baseline
from .fairness import (
    METRIC_KINDS,
    FairnessMetric,
    default_grid_density,
    fairness_value,
    resolve_benchmark_costs,
    simplex_weight_grid,
    solve_fgne,
)
from .model import GameModel, Transformation, apply_transformation
from .vi import SolverParams

COMMANDS = ("vgne", "fgne", "sweep", "audit", "reproduce-fig3", "reproduce-fig4")

_CONFIG_KEYS = (
    "scenario",
    "game",
    "solver",
    "metric",
    "sweep",
    "output",
    "transformations",
)
_GAME_KEYS = ("M", "q", "A", "B", "z_init", "z_ref", "rho0", "rho1", "U_bar")


@dataclass(frozen=True)
class SweepConfig:
    grid_density: int | None = None
    refine_iters: int = 200


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "."
    emit_plots: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str | None = None
    game: EvParams | None = None
    solver: SolverParams = SolverParams()
    metric: FairnessMetric | None = None
    sweep: SweepConfig = SweepConfig()
    output: OutputConfig = OutputConfig()
    transformations: tuple[Transformation, ...] = ()


class _Collector:
    """Accumulates (field_path, message) pairs so every violation is reported."""

    def __init__(self):
        self.errors: list[tuple[str, str]] = []

    def add(self, path: str, msg: str) -> None:
        self.errors.append((path, msg))

    def raise_if_any(self) -> None:
        if self.errors:
            raise ValidationError(self.errors)


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_positive_vector(errs, doc, key, path, allow_zero=False):
    """Validate a scalar-or-list numeric field; returns the value or None."""
    value = doc[key]
    entries = value if isinstance(value, list) else [value]
    suffix = "[{}]" if isinstance(value, list) else ""
    ok = True
    for idx, v in enumerate(entries):
        at = f"{path}{suffix.format(idx)}"
        if not _is_number(v):
            errs.add(at, "must be a number")
            ok = False
        elif allow_zero and v < 0:
            errs.add(at, f"must be nonnegative, got {v}")
            ok = False
        elif not allow_zero and v <= 0:
            errs.add(at, f"must be positive, got {v}")
            ok = False
    return value if ok else None


def _parse_game(errs: _Collector, doc) -> EvParams | None:
    if not isinstance(doc, dict):
        errs.add("game", "must be a mapping of charging-game parameters")
        return None
    for key in doc:
        if key not in _GAME_KEYS:
            errs.add(f"game.{key}", "unknown field")
    if "M" not in doc or not isinstance(doc["M"], int) or doc["M"] < 1:
        errs.add("game.M", "must be a positive integer agent count")
        return None
    m = doc["M"]
    fields = {"M": m}
    specs = {
        "q": dict(allow_zero=False),
        "A": dict(allow_zero=True),
        "B": dict(allow_zero=False),
        "z_init": dict(allow_zero=True),
        "z_ref": dict(allow_zero=False),
        "rho0": dict(allow_zero=False),
        "rho1": dict(allow_zero=True),
    }
    for key, spec in specs.items():
        if key not in doc:
            continue
        value = _check_positive_vector(errs, doc, key, f"game.{key}", **spec)
        if value is None:
            return None
        if isinstance(value, list):
            if len(value) != m:
                errs.add(f"game.{key}", f"must have length {m}")
                return None
            fields[key] = tuple(float(v) for v in value)
        else:
            fields[key] = float(value)
    if "U_bar" in doc:
        if not _is_number(doc["U_bar"]) or doc["U_bar"] <= 0:
            errs.add("game.U_bar", "must be a positive number")
            return None
        fields["U_bar"] = float(doc["U_bar"])
    try:
        return EvParams(**fields)
    except InvalidParams as exc:
        errs.add("game", str(exc))
        return None


def _parse_solver(errs: _Collector, doc) -> SolverParams:
    if not isinstance(doc, dict):
        errs.add("solver", "must be a mapping")
        return SolverParams()
    known = ("max_iters", "tol", "initial_step", "step_backtrack", "seed")
    for key in doc:
        if key not in known:
            errs.add(f"solver.{key}", "unknown field")
    fields = {}
    if "max_iters" in doc:
        if not isinstance(doc["max_iters"], int) or doc["max_iters"] < 1:
            errs.add("solver.max_iters", "must be a positive integer")
        else:
            fields["max_iters"] = doc["max_iters"]
    for key, lo, hi in (("tol", 0.0, None), ("initial_step", 0.0, None),
                        ("step_backtrack", 0.0, 1.0)):
        if key not in doc:
            continue
        v = doc[key]
        if not _is_number(v) or v <= lo or (hi is not None and v >= hi):
            bound = f"in ({lo}, {hi})" if hi is not None else f"> {lo}"
            errs.add(f"solver.{key}", f"must be a number {bound}")
        else:
            fields[key] = float(v)
    if "seed" in doc:
        if not isinstance(doc["seed"], int):
            errs.add("solver.seed", "must be an integer")
        else:
            fields["seed"] = doc["seed"]
    try:
        return SolverParams(**fields)
    except InvalidParams as exc:
        errs.add("solver", str(exc))
        return SolverParams()


def _parse_metric(errs: _Collector, doc) -> FairnessMetric | None:
    if not isinstance(doc, dict):
        errs.add("metric", "must be a mapping")
        return None
    known = ("kind", "alpha", "benchmark", "benchmark_costs")
    for key in doc:
        if key not in known:
            errs.add(f"metric.{key}", "unknown field")
    kind = doc.get("kind")
    if kind not in METRIC_KINDS:
        errs.add("metric.kind", f"must be one of {', '.join(METRIC_KINDS)}")
        return None
    fields = {"kind": kind}
    if kind == "AI":
        alpha = doc.get("alpha")
        if not _is_number(alpha) or alpha <= 0 or alpha == 1:
            errs.add("metric.alpha", "AI requires alpha > 0 with alpha != 1")
            return None
        fields["alpha"] = float(alpha)
    for key in ("benchmark", "benchmark_costs"):
        if key in doc:
            value = doc[key]
            if not isinstance(value, list) or not all(_is_number(v) for v in value):
                errs.add(f"metric.{key}", "must be a list of numbers")
                return None
            fields[key] = tuple(float(v) for v in value)
    return FairnessMetric(**fields)


def _parse_sweep(errs: _Collector, doc) -> SweepConfig:
    if not isinstance(doc, dict):
        errs.add("sweep", "must be a mapping")
        return SweepConfig()
    for key in doc:
        if key not in ("grid_density", "refine_iters"):
            errs.add(f"sweep.{key}", "unknown field")
    fields = {}
    if "grid_density" in doc and doc["grid_density"] is not None:
        if not isinstance(doc["grid_density"], int) or doc["grid_density"] < 3:
            errs.add("sweep.grid_density", "must be an integer >= 3")
        else:
            fields["grid_density"] = doc["grid_density"]
    if "refine_iters" in doc:
        if not isinstance(doc["refine_iters"], int) or doc["refine_iters"] < 0:
            errs.add("sweep.refine_iters", "must be a nonnegative integer")
        else:
            fields["refine_iters"] = doc["refine_iters"]
    return SweepConfig(**fields)


def _parse_output(errs: _Collector, doc) -> OutputConfig:
    if not isinstance(doc, dict):
        errs.add("output", "must be a mapping")
        return OutputConfig()
    for key in doc:
        if key not in ("directory", "emit_plots"):
            errs.add(f"output.{key}", "unknown field")
    fields = {}
    if "directory" in doc:
        if not isinstance(doc["directory"], str) or not doc["directory"]:
            errs.add("output.directory", "must be a nonempty string")
        else:
            fields["directory"] = doc["directory"]
    if "emit_plots" in doc:
        if not isinstance(doc["emit_plots"], bool):
            errs.add("output.emit_plots", "must be a boolean")
        else:
            fields["emit_plots"] = doc["emit_plots"]
    return OutputConfig(**fields)


def _parse_transformations(errs: _Collector, doc) -> tuple[Transformation, ...]:
    if not isinstance(doc, list):
        errs.add("transformations", "must be a list")
        return ()
    out = []
    for idx, item in enumerate(doc):
        path = f"transformations[{idx}]"
        if not isinstance(item, dict) or item.get("kind") not in Transformation.KINDS:
            errs.add(path, "must be a mapping with kind CNC, CUC, or CFC")
            continue
        kind = item["kind"]
        a, b = item.get("a"), item.get("b")
        try:
            if kind == "CNC":
                out.append(Transformation.cnc(a, b))
            elif kind == "CUC":
                out.append(Transformation.cuc(a, b))
            else:
                out.append(Transformation.cfc(a, b))
        except (TypeError, ValueError, InvalidParams) as exc:
            errs.add(path, f"invalid {kind} parameters: {exc}")
    return tuple(out)


def parse_config(document: str) -> ExperimentConfig:
    """Parse and validate a YAML configuration document.

    Raises ``ParseError`` for malformed YAML and ``ValidationError``
    listing every schema violation with its field path.
    """
    try:
        doc = yaml.safe_load(document)
    except yaml.YAMLError as exc:
        raise ParseError(f"malformed configuration document: {exc}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ParseError("configuration document must be a mapping")

    errs = _Collector()
    for key in doc:
        if key not in _CONFIG_KEYS:
            errs.add(key, "unknown field")

    has_scenario = "scenario" in doc
    has_game = "game" in doc
    if has_scenario and has_game:
        errs.add("scenario", "mutually exclusive with inline game")
        errs.add("game", "mutually exclusive with scenario")
    elif not has_scenario and not has_game:
        errs.add("scenario", "exactly one of scenario or game is required")

    name = None
    if has_scenario and not has_game:
        if doc["scenario"] not in SCENARIOS:
            errs.add("scenario", f"must be one of {', '.join(SCENARIOS)}")
        else:
            name = doc["scenario"]

    game = None
    if has_game and not has_scenario:
        game = _parse_game(errs, doc["game"])

    solver = _parse_solver(errs, doc["solver"]) if "solver" in doc else SolverParams()
    metric = _parse_metric(errs, doc["metric"]) if "metric" in doc else None
    sweep = _parse_sweep(errs, doc["sweep"]) if "sweep" in doc else SweepConfig()
    output = _parse_output(errs, doc["output"]) if "output" in doc else OutputConfig()
    transformations = (
        _parse_transformations(errs, doc["transformations"])
        if "transformations" in doc
        else ()
    )
    errs.raise_if_any()
    return ExperimentConfig(
        scenario=name,
        game=game,
        solver=solver,
        metric=metric,
        sweep=sweep,
        output=output,
        transformations=transformations,
    )


def _metric_doc(metric: FairnessMetric) -> dict:
    doc = {"kind": metric.kind}
    if metric.alpha is not None:
        doc["alpha"] = metric.alpha
    if metric.benchmark is not None:
        doc["benchmark"] = list(metric.benchmark)
    if metric.benchmark_costs is not None:
        doc["benchmark_costs"] = list(metric.benchmark_costs)
    return doc


def serialize_config(config: ExperimentConfig) -> str:
    """Canonical YAML for a config; parse_config round-trips it losslessly."""
    doc: dict = {}
    if config.scenario is not None:
        doc["scenario"] = config.scenario
    if config.game is not None:
        p = config.game
        doc["game"] = {
            "M": p.M,
            "q": list(p.q),
            "A": list(p.A),
            "B": list(p.B),
            "z_init": list(p.z_init),
            "z_ref": list(p.z_ref),
            "rho0": list(p.rho0),
            "rho1": list(p.rho1),
            "U_bar": p.U_bar,
        }
    doc["solver"] = dataclasses.asdict(config.solver)
    if config.metric is not None:
        doc["metric"] = _metric_doc(config.metric)
    doc["sweep"] = {
        "grid_density": config.sweep.grid_density,
        "refine_iters": config.sweep.refine_iters,
    }
    if doc["sweep"]["grid_density"] is None:
        del doc["sweep"]["grid_density"]
    doc["output"] = dataclasses.asdict(config.output)
    if config.transformations:
        doc["transformations"] = [
            {
                "kind": t.kind,
                "a": list(t.a) if isinstance(t.a, tuple) else t.a,
                "b": list(t.b) if isinstance(t.b, tuple) else t.b,
            }
            for t in config.transformations
        ]
    return yaml.safe_dump(doc, sort_keys=True, default_flow_style=False)


# ---------------------------------------------------------------------------
# Artifact emission


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    if value is None:
        return ""
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_manifest(out: Path, command: str, config: ExperimentConfig, solves) -> None:
    payload = {
        "command": command,
        "config_sha256": hashlib.sha256(serialize_config(config).encode()).hexdigest(),
        "version": __version__,
        "seed": config.solver.seed,
        "solves": solves,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _build_game(config: ExperimentConfig) -> GameModel:
    if config.scenario is not None:
        return scenario(config.scenario)
    if config.game is not None:
        return build_ev_game(config.game)
    raise ValidationError([("scenario", "exactly one of scenario or game is required")])


def _require_metric(config: ExperimentConfig) -> FairnessMetric:
    if config.metric is None:
        raise ValidationError([("metric", "a metric block is required for this command")])
    return config.metric


def _default_transformations(m: int) -> tuple[Transformation, ...]:
    return (
        Transformation.cuc(2.0, tuple(0.0 for _ in range(m))),
        Transformation.cnc(tuple(float(i + 1) for i in range(m)), tuple(0.0 for _ in range(m))),
    )


def _game_costs(game: GameModel, x: np.ndarray) -> np.ndarray:
    from .fairness import agent_costs

    return agent_costs(game, x)


def _run_vgne(game, config, out) -> list:
    result = solve_vgne(game, config.solver)
    costs = _game_costs(game, result.x)
    rows = [
        [i, result.x[i], costs[i], result.lambda_per_agent[i], result.kkt_residual]
        for i in range(game.num_agents)
    ]
    _write_csv(out / "equilibrium.csv", ["agent", "u", "cost", "lambda", "kkt_residual"], rows)
    return [{"name": "vgne", "converged": result.converged,
             "kkt_residual": result.kkt_residual}]


def _run_fgne(game, config, out) -> list:
    metric = _require_metric(config)
    fg = solve_fgne(
        game,
        metric,
        grid_density=config.sweep.grid_density,
        refine_iters=config.sweep.refine_iters,
        params=config.solver,
    )
    m = game.num_agents
    costs = _game_costs(game, fg.x_star)
    header = (
        ["metric", "f_star"]
        + [f"r_{i+1}" for i in range(m)]
        + [f"u_{i+1}" for i in range(m)]
        + [f"cost_{i+1}" for i in range(m)]
        + [f"lambda_{i+1}" for i in range(m)]
    )
    row = (
        [metric.label, fg.f_star]
        + list(fg.r_star)
        + list(fg.x_star)
        + list(costs)
        + list(fg.result.lambda_per_agent)
    )
    _write_csv(out / "fgne.csv", header, [row])
    trace_rows = [list(r) + [f, conv] for r, f, conv in fg.search_trace]
    _write_csv(
        out / "trace.csv",
        [f"r_{i+1}" for i in range(m)] + ["f", "converged"],
        trace_rows,
    )
    return [{"name": f"fgne:{metric.label}", "converged": True,
             "kkt_residual": fg.result.kkt_residual}]


def _sweep_metrics(config) -> list[FairnessMetric]:
    if config.metric is not None:
        return [config.metric]
    return [
        FairnessMetric.maximin(),
        FairnessMetric.social_welfare(),
        FairnessMetric.nash_bargaining(),
        FairnessMetric.jain_index(),
    ]


def _run_sweep(game, config, out) -> list:
    m = game.num_agents
    density = config.sweep.grid_density or default_grid_density(m)
    grid = simplex_weight_grid(m, density)
    samples = gne_set_sample(game, grid, config.solver)
    metrics = _sweep_metrics(config)
    benches = {mt.label: resolve_benchmark_costs(mt, game) for mt in metrics}

    header = (
        [f"r_{i+1}" for i in range(m)]
        + [f"u_{i+1}" for i in range(m)]
        + [f"lambda_{i+1}" for i in range(m)]
        + ["converged", "strict_complementarity"]
        + [mt.label for mt in metrics]
    )
    rows = []
    solves = []
    for sample in samples:
        row = list(sample.r)
        if sample.converged and sample.result is not None:
            res = sample.result
            row += list(res.x) + list(res.lambda_per_agent)
            row += [True, sample.strict_complementarity]
            costs = _game_costs(game, res.x)
            for mt in metrics:
                try:
                    row.append(fairness_value(mt, costs, benches[mt.label]))
                except (DomainError, MissingBenchmark):
                    row.append(None)
            solves.append({"name": f"r={_fmt(sample.r[0])}", "converged": True,
                           "kkt_residual": res.kkt_residual})
        else:
            row += [None] * (2 * m) + [False, None] + [None] * len(metrics)
            solves.append({"name": f"r={_fmt(sample.r[0])}", "converged": False,
                           "kkt_residual": None})
        rows.append(row)
    _write_csv(out / "gne_set.csv", header, rows)
    return solves


def _transformation_label(t: Transformation) -> str:
    def compact(v):
        if isinstance(v, tuple):
            return "[" + " ".join(_fmt(x) for x in v) + "]"
        return _fmt(v)

    return f"{t.kind} a={compact(t.a)} b={compact(t.b)}"


def _run_audit(game, config, out) -> list:
    m = game.num_agents
    base = solve_vgne(game, config.solver)
    transformations = config.transformations or _default_transformations(m)
    header = ["transformation"] + [f"u_{i+1}" for i in range(m)] + ["deviation_inf"]
    rows = [["baseline"] + list(base.x) + [0.0]]
    solves = [{"name": "baseline", "converged": base.converged,
               "kkt_residual": base.kkt_residual}]
    for t in transformations:
        transformed = apply_transformation(game, t)
        res = solve_vgne(transformed, config.solver)
        deviation = float(np.max(np.abs(res.x - base.x)))
        label = _transformation_label(t)
        rows.append([label] + list(res.x) + [deviation])
        solves.append({"name": label, "converged": res.converged,
                       "kkt_residual": res.kkt_residual})
    _write_csv(out / "audit.csv", header, rows)
    return solves


def _run_fig3(game, config, out) -> list:
    rows = []
    solves = []
    results = {}
    for name in SCENARIOS:
        g = scenario(name)
        res = solve_vgne(g, config.solver)
        costs = _game_costs(g, res.x)
        results[name] = (res.x, costs)
        for i in range(g.num_agents):
            rows.append([name, i, res.x[i], costs[i]])
        solves.append({"name": name, "converged": res.converged,
                       "kkt_residual": res.kkt_residual})
    _write_csv(out / "fig3.csv", ["scenario", "agent", "u", "cost"], rows)
    if config.output.emit_plots:
        _plot_grouped(
            out / "fig3.svg",
            list(SCENARIOS),
            {name: results[name] for name in SCENARIOS},
            "scenario",
        )
    return solves


def _run_fig4(game, config, out) -> list:
    base = two_agent_baseline()
    metrics = [
        FairnessMetric.maximin(),
        FairnessMetric.social_welfare(),
        FairnessMetric.nash_bargaining(),
        FairnessMetric.jain_index(),
    ]
    density = config.sweep.grid_density or default_grid_density(2)
    rows = []
    solves = []
    plot_data = {}
    for a1 in (1.0, 3.0):
        if a1 == 1.0:
            g = base
        else:
            g = apply_transformation(base, Transformation.cnc((a1, 1.0), (0.0, 0.0)))
        res = solve_vgne(g, config.solver)
        costs = _game_costs(g, res.x)
        rows.append([a1, "v-GNE", res.x[0], res.x[1], costs[0], costs[1]])
        plot_data[(a1, "v-GNE")] = (res.x, costs)
        solves.append({"name": f"a1={a1:g}:v-GNE", "converged": res.converged,
                       "kkt_residual": res.kkt_residual})
        for metric in metrics:
            fg = solve_fgne(
                g,
                metric,
                grid_density=density,
                refine_iters=config.sweep.refine_iters,
                params=config.solver,
            )
            fcosts = _game_costs(g, fg.x_star)
            rows.append([a1, metric.label, fg.x_star[0], fg.x_star[1],
                         fcosts[0], fcosts[1]])
            plot_data[(a1, metric.label)] = (fg.x_star, fcosts)
            solves.append({"name": f"a1={a1:g}:{metric.label}", "converged": True,
                           "kkt_residual": fg.result.kkt_residual})
    _write_csv(
        out / "fig4.csv",
        ["scale_a1", "method", "u_1", "u_2", "cost_1", "cost_2"],
        rows,
    )
    if config.output.emit_plots:
        _plot_fig4(out / "fig4.svg", plot_data)
    return solves


def _plot_grouped(path: Path, group_names, results, group_label: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    m = len(next(iter(results.values()))[0])
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    width = 0.8 / m
    xs = np.arange(len(group_names))
    for panel, idx, label in ((0, 0, "allocation u"), (1, 1, "cost")):
        ax = axes[panel]
        for i in range(m):
            vals = [results[g][idx][i] for g in group_names]
            ax.bar(xs + i * width, vals, width, label=f"agent {i+1}")
        ax.set_xticks(xs + width * (m - 1) / 2)
        ax.set_xticklabels(group_names, rotation=20)
        ax.set_ylabel(label)
        ax.set_xlabel(group_label)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _plot_fig4(path: Path, plot_data) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    methods = ["v-GNE", "MM", "SW", "NBS", "JI"]
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
    for panel, a1 in enumerate((1.0, 3.0)):
        ax = axes[panel]
        xs = np.arange(len(methods))
        width = 0.35
        for i in range(2):
            vals = [plot_data[(a1, mlabel)][0][i] for mlabel in methods]
            ax.bar(xs + i * width, vals, width, label=f"agent {i+1}")
        ax.set_xticks(xs + width / 2)
        ax.set_xticklabels(methods, rotation=20)
        ax.set_title(f"agent-1 cost scale {a1:g}")
        ax.set_ylabel("allocation u")
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


_DISPATCH = {
    "vgne": _run_vgne,
    "fgne": _run_fgne,
    "sweep": _run_sweep,
    "audit": _run_audit,
    "reproduce-fig3": _run_fig3,
    "reproduce-fig4": _run_fig4,
}


def run(command: str, config: ExperimentConfig) -> int:
    """Execute a command; returns the process exit code.

    Diagnostics go to stderr; data only to files.  0 success, 2 solver
    non-convergence, 3 invalid configuration, 4 metric domain error.
    """
    if command not in _DISPATCH:
        print(f"error: unknown command {command!r}", file=sys.stderr)
        return 3
    try:
        out = Path(config.output.directory)
        out.mkdir(parents=True, exist_ok=True)
        game = _build_game(config)
        solves = _DISPATCH[command](game, config, out)
        _write_manifest(out, command, config, solves)
    except (NoConvergence, AllPointsFailed) as exc:
        print(f"error: solver failed to converge: {exc}", file=sys.stderr)
        return 2
    except (DomainError, MissingBenchmark) as exc:
        print(f"error: metric domain violation: {exc}", file=sys.stderr)
        return 4
    except (ParseError, ValidationError, InvalidParams, UnknownScenario) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: cannot write artifacts: {exc}", file=sys.stderr)
        return 3
    except FairGneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fairgne",
        description="Equilibrium computation, fairness selection, and invariance audits",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        p = sub.add_parser(cmd)
        p.add_argument("--config", required=True, help="path to a YAML config")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="solver seed (overrides config)")
        p.add_argument("--plots", action="store_true", help="emit vector plots")
    args = parser.parse_args(argv)

    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 3
    try:
        config = parse_config(text)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3

    if args.seed is not None:
        config = dataclasses.replace(
            config, solver=dataclasses.replace(config.solver, seed=args.seed)
        )
    if args.out is not None:
        config = dataclasses.replace(
            config, output=dataclasses.replace(config.output, directory=args.out)
        )
    if args.plots:
        config = dataclasses.replace(
            config, output=dataclasses.replace(config.output, emit_plots=True)
        )
    return run(args.command, config)


if __name__ == "__main__":
    sys.exit(main())
