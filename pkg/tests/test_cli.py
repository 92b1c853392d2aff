"""Config parsing, command execution, artifact layout, and exit codes."""

import csv
import json

import numpy as np
import pytest

from fairgne import ParseError, ValidationError
from fairgne.cli import (
    ExperimentConfig,
    OutputConfig,
    SweepConfig,
    main,
    parse_config,
    run,
    serialize_config,
)
from fairgne.evgame import EvParams
from fairgne.fairness import FairnessMetric
from fairgne.model import Transformation
from fairgne.vi import SolverParams


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestParseConfig:
    def test_minimal_scenario_defaults(self):
        cfg = parse_config("scenario: baseline\n")
        assert cfg.scenario == "baseline"
        assert cfg.game is None
        assert cfg.solver == SolverParams()
        assert cfg.output == OutputConfig()
        assert cfg.sweep == SweepConfig()

    def test_inline_game(self):
        cfg = parse_config(
            """
game:
  M: 2
  q: [1.0, 2.0]
  rho1: 0.2
  U_bar: 0.8
"""
        )
        assert cfg.game.M == 2
        assert cfg.game.q == (1.0, 2.0)
        assert cfg.game.rho1 == (0.2, 0.2)
        assert cfg.game.U_bar == 0.8

    def test_negative_rho1_field_path(self):
        with pytest.raises(ValidationError) as err:
            parse_config("game:\n  M: 2\n  rho1: [-0.1, 0.1]\n")
        paths = [path for path, _ in err.value.errors]
        assert "game.rho1[0]" in paths

    def test_both_game_and_scenario(self):
        with pytest.raises(ValidationError) as err:
            parse_config("scenario: baseline\ngame:\n  M: 2\n")
        paths = [path for path, _ in err.value.errors]
        assert "scenario" in paths and "game" in paths

    def test_neither_game_nor_scenario(self):
        with pytest.raises(ValidationError):
            parse_config("solver:\n  seed: 1\n")

    def test_all_errors_collected(self):
        bad = """
scenario: nowhere
solver:
  tol: -1.0
  seed: 0.5
metric:
  kind: XX
sweep:
  grid_density: 1
"""
        with pytest.raises(ValidationError) as err:
            parse_config(bad)
        paths = [path for path, _ in err.value.errors]
        for expected in ("scenario", "solver.tol", "solver.seed",
                         "metric.kind", "sweep.grid_density"):
            assert expected in paths, paths

    def test_malformed_yaml(self):
        with pytest.raises(ParseError):
            parse_config("scenario: [unclosed\n")

    def test_unknown_fields_reported(self):
        with pytest.raises(ValidationError) as err:
            parse_config("scenario: baseline\nbogus: 1\nsolver:\n  nope: 2\n")
        paths = [path for path, _ in err.value.errors]
        assert "bogus" in paths and "solver.nope" in paths

    def test_metric_alpha(self):
        cfg = parse_config("scenario: baseline\nmetric:\n  kind: AI\n  alpha: 2.0\n")
        assert cfg.metric.kind == "AI" and cfg.metric.alpha == 2.0
        with pytest.raises(ValidationError):
            parse_config("scenario: baseline\nmetric:\n  kind: AI\n  alpha: 1.0\n")

    def test_transformations_parsed(self):
        cfg = parse_config(
            """
scenario: baseline
transformations:
  - {kind: CNC, a: [1, 2, 3], b: [0, 0, 0]}
  - {kind: CUC, a: 2.0, b: [0, 0, 0]}
  - {kind: CFC, a: 2.0, b: 1.0}
"""
        )
        assert [t.kind for t in cfg.transformations] == ["CNC", "CUC", "CFC"]


class TestRoundTrip:
    def test_scenario_config(self):
        cfg = ExperimentConfig(
            scenario="initial_charge",
            solver=SolverParams(seed=7, tol=1e-9),
            metric=FairnessMetric.alpha_fairness(2.5),
            sweep=SweepConfig(grid_density=51, refine_iters=40),
            output=OutputConfig(directory="artifacts", emit_plots=True),
        )
        assert parse_config(serialize_config(cfg)) == cfg

    def test_inline_game_config(self):
        cfg = ExperimentConfig(
            game=EvParams(M=2, q=(1.0, 1.5), z_init=(0.0, 0.25), U_bar=0.9),
            metric=FairnessMetric.nash_bargaining(benchmark=(0.0, 0.0)),
            transformations=(
                Transformation.cnc((1.0, 2.0), (0.0, 0.0)),
                Transformation.cfc(2.0, 1.0),
            ),
        )
        assert parse_config(serialize_config(cfg)) == cfg


class TestCommands:
    def test_vgne_artifacts(self, tmp_path):
        cfg = parse_config(f"scenario: baseline\noutput:\n  directory: {tmp_path}\n")
        assert run("vgne", cfg) == 0
        rows = read_csv(tmp_path / "equilibrium.csv")
        assert rows[0] == ["agent", "u", "cost", "lambda", "kkt_residual"]
        assert len(rows) == 4
        us = [float(r[1]) for r in rows[1:]]
        lams = [float(r[3]) for r in rows[1:]]
        assert us == pytest.approx([1 / 3] * 3, abs=1e-9)
        assert lams == pytest.approx([1.15] * 3, abs=1e-9)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["command"] == "vgne"
        assert manifest["version"]
        assert all(s["converged"] for s in manifest["solves"])

    def test_sweep_row_count(self, tmp_path):
        cfg = parse_config(
            "game:\n  M: 2\noutput:\n  directory: %s\nsweep:\n  grid_density: 101\n"
            % tmp_path
        )
        assert run("sweep", cfg) == 0
        rows = read_csv(tmp_path / "gne_set.csv")
        assert len(rows) == 102  # header + 101 samples
        header = rows[0]
        for col in ("r_1", "r_2", "u_1", "u_2", "lambda_1", "lambda_2",
                    "converged", "strict_complementarity", "MM", "SW", "NBS", "JI"):
            assert col in header

    def test_fgne_artifacts(self, tmp_path):
        cfg = parse_config(
            f"""
game:
  M: 2
metric:
  kind: NBS
sweep:
  grid_density: 41
  refine_iters: 60
output:
  directory: {tmp_path}
"""
        )
        assert run("fgne", cfg) == 0
        incumbent = read_csv(tmp_path / "fgne.csv")
        assert incumbent[1][0] == "NBS"
        us = [float(v) for v in incumbent[1][4:6]]
        assert us == pytest.approx([0.5, 0.5], abs=1e-5)
        trace = read_csv(tmp_path / "trace.csv")
        assert trace[0] == ["r_1", "r_2", "f", "converged"]
        assert len(trace) > 41

    def test_audit_deviations(self, tmp_path):
        cfg = parse_config(
            f"""
scenario: baseline
output:
  directory: {tmp_path}
transformations:
  - {{kind: CUC, a: 2.0, b: [0, 0, 0]}}
  - {{kind: CNC, a: [1, 2, 3], b: [0, 0, 0]}}
"""
        )
        assert run("audit", cfg) == 0
        rows = read_csv(tmp_path / "audit.csv")
        assert rows[1][0] == "baseline"
        by_label = {r[0]: float(r[-1]) for r in rows[1:]}
        assert by_label["baseline"] == 0.0
        assert by_label["CUC a=2 b=[0 0 0]"] <= 1e-7
        assert by_label["CNC a=[1 2 3] b=[0 0 0]"] > 1e-3

    def test_fig3_rows(self, tmp_path):
        cfg = parse_config(f"scenario: baseline\noutput:\n  directory: {tmp_path}\n")
        assert run("reproduce-fig3", cfg) == 0
        rows = read_csv(tmp_path / "fig3.csv")
        assert rows[0] == ["scenario", "agent", "u", "cost"]
        assert len(rows) == 1 + 4 * 3
        scenarios = {r[0] for r in rows[1:]}
        assert scenarios == {"baseline", "scaling", "initial_charge",
                             "transformed_cost"}

    def test_fig4_unscaled_side_overlaps(self, tmp_path):
        cfg = parse_config(
            f"""
scenario: baseline
sweep:
  grid_density: 41
  refine_iters: 60
output:
  directory: {tmp_path}
"""
        )
        assert run("reproduce-fig4", cfg) == 0
        rows = read_csv(tmp_path / "fig4.csv")
        assert rows[0] == ["scale_a1", "method", "u_1", "u_2", "cost_1", "cost_2"]
        unscaled = [r for r in rows[1:] if float(r[0]) == 1.0]
        assert {r[1] for r in unscaled} == {"v-GNE", "MM", "SW", "NBS", "JI"}
        for r in unscaled:
            assert float(r[2]) == pytest.approx(0.5, abs=1e-6)
            assert float(r[3]) == pytest.approx(0.5, abs=1e-6)
        scaled_mm = [r for r in rows[1:] if float(r[0]) == 3.0 and r[1] == "MM"][0]
        assert float(scaled_mm[2]) > float(scaled_mm[3])

    def test_plots_emitted(self, tmp_path):
        cfg = parse_config(
            f"scenario: baseline\noutput:\n  directory: {tmp_path}\n  emit_plots: true\n"
        )
        assert run("reproduce-fig3", cfg) == 0
        svg = (tmp_path / "fig3.svg").read_text()
        assert svg.lstrip().startswith("<?xml")


class TestDeterminism:
    def test_byte_identical_reruns(self, tmp_path):
        outputs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            cfg = parse_config(
                "game:\n  M: 2\nsolver:\n  seed: 42\n"
                f"sweep:\n  grid_density: 21\noutput:\n  directory: {out}\n"
            )
            assert run("sweep", cfg) == 0
            outputs.append((out / "gne_set.csv").read_bytes())
        assert outputs[0] == outputs[1]

    def test_significant_digit_format(self, tmp_path):
        cfg = parse_config(f"scenario: baseline\noutput:\n  directory: {tmp_path}\n")
        assert run("vgne", cfg) == 0
        rows = read_csv(tmp_path / "equilibrium.csv")
        assert rows[1][1] == "0.333333333333"  # 12 significant digits


class TestExitCodes:
    def test_invalid_config_exit_3(self, tmp_path, capsys):
        path = tmp_path / "bad.yaml"
        path.write_text("scenario: nowhere\n")
        code = main(["vgne", "--config", str(path), "--out", str(tmp_path)])
        assert code == 3
        assert "scenario" in capsys.readouterr().err

    def test_missing_config_exit_3(self, tmp_path):
        assert main(["vgne", "--config", str(tmp_path / "nope.yaml")]) == 3

    def test_nonconvergence_exit_2(self, tmp_path, capsys):
        path = tmp_path / "cfg.yaml"
        path.write_text(
            "scenario: transformed_cost\nsolver:\n  max_iters: 2\n"
            f"output:\n  directory: {tmp_path}\n"
        )
        assert main(["vgne", "--config", str(path)]) == 2
        assert capsys.readouterr().err

    def test_metric_domain_exit_4(self, tmp_path, capsys):
        # zero-decision benchmark is outside the log cost's domain
        path = tmp_path / "cfg.yaml"
        path.write_text(
            "scenario: transformed_cost\nmetric:\n  kind: NBS\n"
            f"output:\n  directory: {tmp_path}\n"
        )
        assert main(["fgne", "--config", str(path)]) == 4
        assert capsys.readouterr().err

    def test_cli_overrides(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("scenario: baseline\n")
        out = tmp_path / "cli-out"
        assert main(["vgne", "--config", str(path), "--out", str(out),
                     "--seed", "9"]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 9
