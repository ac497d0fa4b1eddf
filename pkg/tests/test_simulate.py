import math

import numpy as np
import pytest
from scipy import stats

from pdmg.model import model_from_dict
from pdmg.shapley import SolverConfig, SolverError, backward_solve
from pdmg.simulate import (
    SimConfig,
    _constant_pieces,
    _FiniteTables,
    _path_rng,
    _simulate_exponent_finite,
    estimate_J,
    simulate_path,
)

from conftest import singleton_strategies


class TestDeterministicPaths:
    def test_no_jumps_exact_exponent(self, const_cost):
        strategies = singleton_strategies(const_cost, n_steps=1)
        tr = simulate_path(const_cost, strategies, 0.0, 0, _path_rng(1, 0))
        assert tr.jumps == []
        assert tr.exponent == pytest.approx(0.5 * 2.0 * 1.0, abs=1e-14)

    def test_partial_horizon(self, const_cost):
        strategies = singleton_strategies(const_cost, n_steps=1)
        tr = simulate_path(const_cost, strategies, 0.25, 0, _path_rng(1, 0))
        assert tr.exponent == pytest.approx(0.5 * 2.0 * 0.75, abs=1e-14)

    def test_estimate_zero_variance(self, const_cost):
        strategies = singleton_strategies(const_cost, n_steps=1)
        est = estimate_J(const_cost, strategies, 0.0, 0, SimConfig(n_paths=50, rng_seed=9))
        assert est.mean == pytest.approx(math.e, abs=1e-12)
        assert est.stderr == 0.0
        assert est.min_exponent == est.max_exponent == pytest.approx(1.0, abs=1e-14)

    def test_t0_validation(self, const_cost):
        strategies = singleton_strategies(const_cost, n_steps=1)
        with pytest.raises(ValueError):
            simulate_path(const_cost, strategies, 1.0, 0, _path_rng(0, 0))


class TestJumpLaw:
    def test_jump_times_increasing_in_window(self, two_state):
        strategies = singleton_strategies(two_state, n_steps=4)
        for i in range(200):
            tr = simulate_path(two_state, strategies, 0.0, 0, _path_rng(17, i))
            times = [t for t, _ in tr.jumps]
            assert all(0.0 < t <= 1.0 for t in times)
            assert all(b > a for a, b in zip(times, times[1:]))

    @pytest.mark.parametrize("factor", [1.25, 2.0])
    def test_first_jump_is_truncated_exponential(self, two_state, factor):
        # thinning against a loose bound must not distort the law: the
        # accepted first-jump times follow Exp(1) conditioned on <= T
        strategies = singleton_strategies(two_state, n_steps=1)
        times = []
        for i in range(100_000):
            tr = simulate_path(two_state, strategies, 0.0, 0, _path_rng(23, i), factor)
            if tr.jumps:
                times.append(tr.jumps[0][0])

        def cdf(t):
            return (1.0 - np.exp(-t)) / (1.0 - math.exp(-1.0))

        res = stats.kstest(times, cdf)
        assert res.pvalue > 0.01
        # acceptance fraction matches P(tau <= 1) = 1 - e^{-1}
        frac = len(times) / 100_000
        assert frac == pytest.approx(1.0 - math.exp(-1.0), abs=0.005)


class TestEstimates:
    def test_uncontrolled_mean_two(self, two_state):
        strategies = singleton_strategies(two_state, n_steps=1)
        est = estimate_J(two_state, strategies, 0.0, 0, SimConfig(n_paths=100_000, rng_seed=42))
        assert abs(est.mean - 2.0) <= 3.0 * est.stderr
        assert est.mean > 0.0 and est.stderr > 0.0

    def test_feynman_kac_on_controlled_saddle(self, controlled, controlled_saddle_1000):
        field, strategies = controlled_saddle_1000
        est = estimate_J(controlled, strategies, 0.0, 0, SimConfig(n_paths=20_000, rng_seed=101))
        fine, _ = backward_solve(controlled, SolverConfig(n_steps=2000))
        disc = 3.0 * abs(field.phi[0, 0] - fine.phi[0, 0]) + 1e-9
        assert abs(est.mean - field.phi[0, 0]) <= 3.0 * est.stderr + disc

    def test_determinism_bitwise(self, two_state):
        strategies = singleton_strategies(two_state, n_steps=1)
        cfg = SimConfig(n_paths=2000, rng_seed=7)
        a = estimate_J(two_state, strategies, 0.0, 0, cfg)
        b = estimate_J(two_state, strategies, 0.0, 0, cfg)
        assert a == b
        c = estimate_J(two_state, strategies, 0.0, 0, SimConfig(n_paths=2000, rng_seed=8))
        assert c.mean != a.mean

    def test_overflow_reported(self):
        doc = {
            "lambda": 1.0,
            "horizon": 1.0,
            "states": {"finite": ["a"]},
            "actions": {"p1": [[0]], "p2": [[0]]},
            "costs": [{"state": 0, "a": 0, "b": 0, "value": 2000.0}],
        }
        m = model_from_dict(doc)
        strategies = singleton_strategies(m, n_steps=1)
        with pytest.raises(SolverError, match="overflow"):
            estimate_J(m, strategies, 0.0, 0, SimConfig(n_paths=3, rng_seed=0))

    def test_bound_violation_guard(self, two_state):
        strategies = singleton_strategies(two_state, n_steps=1)
        tables = _FiniteTables(two_state, strategies)
        tables.q_star = np.array([0.1, 0.0])  # force an invalid bound
        with pytest.raises(SolverError, match="thinning bound violated"):
            for i in range(200):
                _simulate_exponent_finite(two_state, tables, 0.0, 0, _path_rng(5, i), 1.0)


class TestGridFlowWalk:
    def test_constant_pieces_cross_at_half_cells(self, grid_flow):
        # mode "up": drift 0.8, width 1/24, anchored at cell 5
        pieces = list(_constant_pieces(grid_flow, 0.0, 5, 0.0, 0.2))
        assert pieces[0][2] == 5
        # first crossing where 5 + 0.8*24*t = 5.5  ->  t = 0.5/19.2
        assert pieces[0][1] == pytest.approx(0.5 / 19.2, abs=1e-12)
        assert pieces[1][2] == 6
        assert sum(b - a for a, b, _ in pieces) == pytest.approx(0.2, abs=1e-12)

    def test_pieces_partition_and_match_flow(self, grid_flow):
        for start in (0, 3, 20):
            pieces = list(_constant_pieces(grid_flow, 0.0, start, 0.0, 1.0))
            for a, b, state in pieces:
                mid = 0.5 * (a + b)
                assert grid_flow.flow(start, mid) == state

    def test_grid_estimate_matches_solver(self, grid_flow):
        field, strategies = backward_solve(grid_flow, SolverConfig(n_steps=500))
        fine, _ = backward_solve(grid_flow, SolverConfig(n_steps=1000))
        x0 = 12
        est = estimate_J(grid_flow, strategies, 0.0, x0, SimConfig(n_paths=3000, rng_seed=202))
        disc = 3.0 * abs(field.phi[0, x0] - fine.phi[0, x0]) + 1e-9
        assert abs(est.mean - field.phi[0, x0]) <= 3.0 * est.stderr + disc

    def test_trajectory_dump_alignment(self, grid_flow):
        strategies = singleton_strategies(grid_flow, n_steps=1)
        for i in range(50):
            tr = simulate_path(grid_flow, strategies, 0.0, 5, _path_rng(31, i))
            assert len(tr.jumps) == len(tr.jump_exponents)


class TestSimConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SimConfig(n_paths=0, rng_seed=1)
        with pytest.raises(ValueError):
            SimConfig(n_paths=1, rng_seed=1, rate_bound_factor=0.5)
