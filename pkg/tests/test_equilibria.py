"""Best responses, equilibrium membership, weighted solves, multipliers."""

import numpy as np
import pytest

from fairgne import (
    AgentSpec,
    EvQuadratic,
    FeasibleSet,
    GameModel,
    InfeasibleResidual,
    LogPlusQuadratic,
    NotStationary,
    PureQuadraticGap,
    SolverParams,
    Transformation,
    apply_transformation,
    best_response,
    eval_cost,
    gne_set_sample,
    is_gne,
    pseudo_gradient,
    recover_multipliers,
    solve_normalized,
    solve_vgne,
)
from test_model import symmetric_agent, symmetric_game


class TestBestResponse:
    def test_quadratic_vertex_clamps_to_cap(self):
        game = symmetric_game()
        # unconstrained vertex (1.95 - 0.1*0.5)/2.2 ~ 0.8636 clamps to 0.5
        br = best_response(game, 0, np.array([0.0, 0.5]))
        assert br == pytest.approx(0.5, abs=1e-14)

    def test_quadratic_vertex_interior(self):
        game = GameModel.build([symmetric_agent(), symmetric_agent()],
                               FeasibleSet.nonnegative(2, 5.0))
        br = best_response(game, 0, np.array([0.0, 0.5]))
        assert br == pytest.approx((1.95 - 0.05) / 2.2, rel=1e-12)

    def test_zero_residual_cap_returns_bound(self):
        game = symmetric_game()
        assert best_response(game, 0, np.array([0.3, 1.0])) == 0.0

    def test_pure_gap_exact_tracking(self):
        agents = [AgentSpec(PureQuadraticGap(gap_ref=1.0, B=1.0, z_init=0.0,
                                             rho0=1e-300, rho1=0.0)),
                  symmetric_agent()]
        game = GameModel.build(agents, FeasibleSet.nonnegative(2, 3.0))
        br = best_response(game, 0, np.array([0.0, 0.2]))
        assert br == pytest.approx(1.0, abs=1e-12)

    def test_infeasible_residual(self):
        game = symmetric_game()
        with pytest.raises(InfeasibleResidual):
            best_response(game, 0, np.array([0.0, 1.5]))

    def test_golden_section_stationary_for_log_cost(self):
        agents = [AgentSpec(LogPlusQuadratic(C=1.0, weight=0.1, gap_ref=1.0,
                                             rho0=0.05, rho1=0.1)),
                  symmetric_agent()]
        game = GameModel.build(agents, FeasibleSet(np.array([1e-9, 0.0]), 5.0))
        x = np.array([0.0, 0.4])
        br = best_response(game, 0, x)
        assert 1e-9 < br < 4.6  # interior of [lb, cap]
        grad = pseudo_gradient(game, np.array([br, 0.4]))[0]
        assert abs(grad) <= 1e-5

    def test_golden_section_returns_cap_when_binding(self):
        agents = [AgentSpec(LogPlusQuadratic(C=1.0, weight=0.1, gap_ref=1.0,
                                             rho0=0.05, rho1=0.1)),
                  symmetric_agent()]
        game = GameModel.build(agents, FeasibleSet(np.array([1e-9, 0.0]), 1.0))
        br = best_response(game, 0, np.array([0.0, 0.4]))
        assert br == pytest.approx(0.6, abs=1e-10)


class TestIsGne:
    def test_vgne_passes(self):
        game = symmetric_game()
        result = solve_vgne(game)
        check = is_gne(game, result.x, 1e-8)
        assert check.verdict
        assert np.all(check.per_agent_gaps <= 1e-10)

    def test_lopsided_point_fails(self):
        game = symmetric_game()
        check = is_gne(game, np.array([0.9, 0.1]), 1e-8)
        assert not check.verdict
        # agent 2 is capped by the exhausted budget, so the profitable
        # unilateral deviation belongs to the overcharging agent 1
        assert check.per_agent_gaps[0] > 1e-4
        assert check.max_improvement > 1e-4

    def test_verdict_invariant_under_cnc(self):
        game = symmetric_game()
        a = (3.0, 0.5)
        scaled = apply_transformation(game, Transformation.cnc(a, (1.0, -4.0)))
        points = [solve_vgne(game).x, np.array([0.9, 0.1]), np.array([0.2, 0.6])]
        for x in points:
            base = is_gne(game, x, 1e-8)
            after = is_gne(scaled, x, 1e-8 * min(a))
            assert base.verdict == after.verdict
            # gaps rescale by a_i
            assert after.per_agent_gaps == pytest.approx(
                np.asarray(a) * base.per_agent_gaps, abs=1e-8
            )


class TestSolveVgne:
    def test_symmetric_split(self):
        result = solve_vgne(symmetric_game())
        assert result.x == pytest.approx([0.5, 0.5], abs=1e-10)
        assert result.uniform_lambda == pytest.approx(0.8, abs=1e-10)
        assert result.is_vgne
        assert result.kkt_residual <= 1e-10
        assert is_gne(symmetric_game(), result.x, 1e-6).verdict

    def test_decoupled_interior(self):
        agents = [
            AgentSpec(EvQuadratic(z_ref=0.4, rho0=0.01, rho1=0.0)),
            AgentSpec(EvQuadratic(z_ref=0.3, rho0=0.01, rho1=0.0)),
        ]
        game = GameModel.build(agents, FeasibleSet.nonnegative(2, 5.0))
        result = solve_vgne(game)
        expected = [0.4 - 0.005, 0.3 - 0.005]  # vertex of (z_ref - u)^2 + 0.01 u
        assert result.x == pytest.approx(expected, rel=1e-12)
        assert result.uniform_lambda == 0.0

    def test_cuc_invariance(self):
        game = symmetric_game()
        base = solve_vgne(game)
        transformed = apply_transformation(game, Transformation.cuc(2.0, (7.0, -1.0)))
        after = solve_vgne(transformed)
        assert np.max(np.abs(after.x - base.x)) <= 2.0 * SolverParams().tol

    def test_extragradient_route_for_nonaffine(self):
        agents = [AgentSpec(PureQuadraticGap(gap_ref=1.0, rho0=0.05, rho1=0.1)),
                  symmetric_agent()]
        game = GameModel.build(agents, FeasibleSet.nonnegative(2, 1.0))
        assert game.affine_form is None
        result = solve_vgne(game)
        # identical to the all-quadratic symmetric game
        assert result.x == pytest.approx([0.5, 0.5], abs=1e-8)
        assert result.kkt_residual <= 1e-6


class TestSolveNormalized:
    def test_unit_weights_match_vgne(self):
        game = symmetric_game()
        a = solve_vgne(game)
        b = solve_normalized(game, np.ones(2))
        assert np.array_equal(a.x, b.x)
        assert a.uniform_lambda == b.uniform_lambda
        assert a.is_vgne
        assert np.max(np.abs(a.lambda_per_agent - a.uniform_lambda)) <= 1e-6

    def test_weighted_multiplier_identity(self):
        game = symmetric_game()
        r = np.array([2.0, 1.0])
        res = solve_normalized(game, r)
        prods = r * res.lambda_per_agent
        assert abs(prods[0] - prods[1]) <= 1e-6
        assert not res.is_vgne
        assert is_gne(game, res.x, 1e-6).verdict

    def test_weight_scaling_irrelevant(self):
        game = symmetric_game()
        a = solve_normalized(game, np.array([2.0, 1.0]))
        b = solve_normalized(game, np.array([6.0, 3.0]))
        assert np.max(np.abs(a.x - b.x)) <= 2.0 * SolverParams().tol

    def test_kkt_residual_contract(self):
        game = symmetric_game()
        for r1 in (0.5, 1.0, 1.6):
            res = solve_normalized(game, np.array([r1, 2.0 - r1]))
            assert res.converged
            assert res.kkt_residual <= 1e-6


class TestRecoverMultipliers:
    def test_symmetric_vgne(self):
        game = symmetric_game()
        rec = recover_multipliers(game, solve_vgne(game).x)
        assert rec.lambda_per_agent == pytest.approx([0.8, 0.8], abs=1e-9)
        assert np.all(rec.mu == 0.0)

    def test_interior_zero_gradient(self):
        agents = [
            AgentSpec(PureQuadraticGap(gap_ref=0.4, rho0=0.01, rho1=0.0)),
            AgentSpec(PureQuadraticGap(gap_ref=0.3, rho0=0.01, rho1=0.0)),
        ]
        game = GameModel.build(agents, FeasibleSet.nonnegative(2, 5.0))
        rec = recover_multipliers(game, solve_vgne(game).x)
        assert np.all(rec.lambda_per_agent == 0.0)
        assert np.all(rec.mu == 0.0)

    def test_weighted_ratio(self):
        game = symmetric_game()
        res = solve_normalized(game, np.array([2.0, 1.0]))
        rec = recover_multipliers(game, res.x)
        ratio = rec.lambda_per_agent[0] / rec.lambda_per_agent[1]
        assert ratio == pytest.approx(0.5, abs=1e-6)

    def test_not_stationary_on_arbitrary_point(self):
        game = symmetric_game()
        with pytest.raises(NotStationary):
            recover_multipliers(game, np.array([0.1, 0.2]))

    def test_uniform_at_interior_vgne(self):
        # per-agent multipliers at orthant-bound coordinates are set-valued,
        # so uniformity is asserted on games with interior solutions
        rng = np.random.default_rng(61)
        from oracles import random_ev_game

        checked = 0
        for _ in range(30):
            game = random_ev_game(rng)
            x = solve_vgne(game).x
            if np.min(x - game.feasible.lower_bounds) <= 1e-6:
                continue
            rec = recover_multipliers(game, x)
            lam = rec.lambda_per_agent
            assert float(np.max(lam) - np.min(lam)) <= 1e-6
            checked += 1
        assert checked >= 5


class TestGneSetSample:
    def test_singleton_unit_grid(self):
        game = symmetric_game()
        samples = gne_set_sample(game, [np.ones(2)])
        assert len(samples) == 1
        assert samples[0].converged
        assert np.array_equal(samples[0].result.x, solve_vgne(game).x)

    def test_sweep_continuity_and_bracketing(self):
        game = symmetric_game()
        grid = [np.array([v, 2.0 - v]) for v in np.linspace(0.1, 1.9, 101)]
        samples = gne_set_sample(game, grid)
        assert all(s.converged for s in samples)
        u1 = np.array([s.result.x[0] for s in samples])
        # u_1 moves monotonically with the de-emphasis direction of r_1
        assert np.all(np.diff(u1) > 0)
        assert u1[0] < 0.5 < u1[-1]
        # continuity: no jumps beyond the grid resolution scale
        assert np.max(np.abs(np.diff(u1))) < 0.05
        # every sample re-verified through best responses
        for s in samples[::10]:
            assert is_gne(game, s.result.x, 1e-6).verdict

    def test_normalizes_weights(self):
        game = symmetric_game()
        samples = gne_set_sample(game, [np.array([10.0, 10.0])])
        assert samples[0].r == pytest.approx([1.0, 1.0])

    def test_strict_complementarity_recorded(self):
        game = symmetric_game()
        samples = gne_set_sample(game, [np.ones(2), np.array([0.5, 1.5])])
        for s in samples:
            assert s.strict_complementarity is True

    def test_failures_recorded_not_dropped(self):
        game = symmetric_game()
        # weights extreme enough to lose monotonicity of the weighted
        # operator; budget the iteration so failure is fast
        grid = [np.ones(2), np.array([1e-6, 2.0])]
        params = SolverParams(max_iters=50)
        samples = gne_set_sample(game, grid, params)
        assert len(samples) == 2
        assert samples[0].converged
        assert not samples[1].converged
        assert samples[1].failure is not None
        assert samples[1].result is None
