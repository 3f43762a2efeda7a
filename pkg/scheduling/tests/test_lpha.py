import pytest

from scheduling.analysis import solve_lpha
from scheduling.core import ObjectiveWeights, expected_objective, validate
from scheduling.evaluator import EvaluatorConfig
from scheduling.exceptions import Infeasible, NoConvergence
from scheduling.generator import GenSpec, generate_instance
from scheduling.lpha import (
    LphaConfig,
    LphaState,
    compute_consensus,
    consensus_schedule,
    delta_dual,
    delta_primal,
    detect_cycles_and_fix,
    draw_hash_weights,
    majority_value,
    run_lpha,
    update_cuts,
    update_multipliers,
    update_penalty,
)

from .conftest import make_instance

WEIGHTS = ObjectiveWeights(0.3, 0.3, 0.4)
STRICT = EvaluatorConfig(strict_overtime=True)
CFG = LphaConfig(alpha=2.0, rho_u1=0.1, rho_u2=1.0, iterlimit=100)


def state_with(**kwargs):
    defaults = {'probabilities': (0.5, 0.5), 'hash_weights': (0.3, 0.8), 'iteration': 5}
    defaults.update(kwargs)
    return LphaState(**defaults)


class TestUpdatePenalty:
    def test_dual_growth_below_cap_multiplies(self):
        state = state_with(rho=0.01, delta_d=[1.0, 2.0], delta_p=[None, 1.0])
        assert update_penalty(state, CFG) == pytest.approx(0.02)

    def test_dual_growth_at_cap_clamps(self):
        state = state_with(rho=0.5, delta_d=[1.0, 2.0], delta_p=[None, 1.0])
        assert update_penalty(state, CFG) == 0.1

    def test_primal_growth_divides(self):
        state = state_with(rho=0.05, delta_d=[2.0, 1.0], delta_p=[1.0, 3.0])
        assert update_penalty(state, CFG) == pytest.approx(0.025)

    def test_no_growth_keeps_rho_under_cap(self):
        state = state_with(rho=0.05, delta_d=[2.0, 1.0], delta_p=[3.0, 1.0])
        assert update_penalty(state, CFG) == 0.05

    def test_no_growth_above_cap_clamps(self):
        state = state_with(rho=0.5, delta_d=[2.0, 1.0], delta_p=[3.0, 1.0])
        assert update_penalty(state, CFG) == 0.1

    def test_second_cap_after_iterlimit(self):
        state = state_with(iteration=101, rho=0.5, delta_d=[2.0, 1.0], delta_p=[3.0, 1.0])
        assert update_penalty(state, CFG) == 0.5

    def test_missing_primal_history_is_not_growth(self):
        state = state_with(rho=0.05, delta_d=[2.0, 1.0], delta_p=[None, 4.0])
        assert update_penalty(state, CFG) == 0.05


class TestMultipliers:
    def test_zero_sum_after_update(self):
        appointments = [(10, 20), (20, 40)]
        state = state_with(
            appointments=appointments,
            consensus=compute_consensus(appointments, (0.5, 0.5)),
            multipliers=[[0.0, 0.0], [0.0, 0.0]],
        )
        update_multipliers(state, 0.1)
        assert state.multipliers == [[-0.5, -1.0], [0.5, 1.0]]

    def test_wrong_consensus_breaks_zero_sum(self):
        state = state_with(
            appointments=[(10, 20), (20, 40)],
            consensus=(0.0, 0.0),
            multipliers=[[0.0, 0.0], [0.0, 0.0]],
        )
        with pytest.raises(AssertionError):
            update_multipliers(state, 0.1)


class TestConsensus:
    def test_consensus_and_deltas(self):
        consensus = compute_consensus([(10, 20), (20, 40)], (0.25, 0.75))
        assert consensus == (17.5, 35.0)
        assert delta_primal(consensus, (17.5, 30.0)) == 25.0
        assert delta_dual([(10, 20), (20, 40)], consensus) == 7.5**2 + 15**2 + 2.5**2 + 5**2

    def test_consensus_schedule_rounds_half_up(self):
        schedule = consensus_schedule((10.5, 3.2, 3.2))
        assert schedule.appointment == (11, 3, 3)
        assert schedule.sequence == (1, 2, 0)


class TestFixing:
    def test_majority_ties_go_to_smallest(self):
        assert majority_value([20, 10, 20, 10], (0.25,) * 4) == 10
        assert majority_value([20, 10, 20], (0.4, 0.2, 0.4)) == 20

    def test_agreement_fixing(self):
        state = state_with(
            probabilities=(0.2,) * 5,
            hash_weights=(0.1, 0.2, 0.3, 0.4, 0.6),
            appointments=[(10,), (10,), (10,), (10,), (20,)],
            multipliers=[[0.0]] * 5,
        )
        detect_cycles_and_fix(state, LphaConfig(fix_fraction=0.8))
        assert state.fixed == {0: 10}
        assert state.fix_events[0]['reason'] == 'agreement'

    def test_below_fraction_not_fixed(self):
        state = state_with(
            probabilities=(0.25,) * 4,
            hash_weights=(0.1, 0.2, 0.3, 0.4),
            appointments=[(10,), (10,), (10,), (20,)],
            multipliers=[[0.0]] * 4,
        )
        detect_cycles_and_fix(state, LphaConfig(fix_fraction=0.8))
        assert state.fixed == {}

    def test_constant_hash_flags_cycle(self):
        cfg = LphaConfig(fix_start_iter=1, fix_fraction=0.99, cycle_window=3)
        state = state_with(
            appointments=[(10,), (20,)],
            multipliers=[[-2.0], [2.0]],
        )
        for iteration in (2, 3):
            state.iteration = iteration
            assert detect_cycles_and_fix(state, cfg) == set()
        state.iteration = 4
        assert detect_cycles_and_fix(state, cfg) == {0}
        assert state.fixed == {0: 10}
        assert state.fix_events[-1]['reason'] == 'cycle'

    def test_no_cycle_fixing_before_start_iteration(self):
        cfg = LphaConfig(fix_start_iter=50, fix_fraction=0.99, cycle_window=3)
        state = state_with(appointments=[(10,), (20,)], multipliers=[[-2.0], [2.0]])
        for iteration in (2, 3, 4, 5):
            state.iteration = iteration
            detect_cycles_and_fix(state, cfg)
        assert state.fixed == {}


def test_cut_pools_close_on_repeated_points():
    state = state_with(
        appointments=[(10, 20), (30, 40)],
        cuts=[((10,), (25,)), ((), ())],
        closed_cuts=[set(), set()],
    )
    update_cuts(state)
    assert state.cuts == [((10,), (25, 20)), ((30,), (40,))]
    assert state.closed_cuts == [{0}, set()]

    state.appointments = [(12, 20), (30, 41)]
    update_cuts(state)
    assert state.cuts == [((10,), (25, 20)), ((30,), (40, 41))]
    assert state.closed_cuts == [{0, 1}, {0}]


def test_hash_weights_avoid_probabilities():
    import numpy as np

    weights = draw_hash_weights(np.random.default_rng(0), (0.5, 0.5))
    assert len(weights) == 2
    assert all(0 <= z < 1 and z != 0.5 for z in weights)
    assert weights == draw_hash_weights(np.random.default_rng(0), (0.5, 0.5))


def test_config_validation():
    with pytest.raises(ValueError):
        LphaConfig(alpha=1.0)
    with pytest.raises(ValueError):
        LphaConfig(rho_u1=1.0, rho_u2=0.5)
    with pytest.raises(ValueError):
        LphaConfig(fix_fraction=0)


class TestRunLpha:
    def test_single_scenario_converges_at_once(self, two_patients):
        schedule, report = run_lpha(two_patients, WEIGHTS, seed=0)
        assert report.converged
        assert report.iterations == 1
        assert len(report.rho_trace) == len(report.delta_d_trace) == len(report.fixed_trace) == 1
        assert validate(schedule, two_patients) == []
        decomposition = report.decomposition
        assert decomposition['objective'] == pytest.approx(
            0.3 * decomposition['ewt'] + 0.3 * decomposition['eot'] + 0.4 * decomposition['eit']
        )
        assert report.version

    def test_no_convergence_carries_incumbent(self, diverging):
        with pytest.raises(NoConvergence) as excinfo:
            run_lpha(diverging, WEIGHTS, LphaConfig(max_iterations=1), seed=0)
        exc = excinfo.value
        assert exc.iterations == 1
        assert exc.schedule is not None
        assert validate(exc.schedule, diverging) == []
        assert not exc.report.converged
        assert exc.report.trace_rows()[0]['iteration'] == 1

    def test_identical_scenarios_agree_at_once(self):
        inst = make_instance([[10, 5, 20]] * 2, [[30, 20, 60]] * 2, nurses=1, chairs=2)
        schedule, report = run_lpha(inst, WEIGHTS, seed=0)
        assert report.converged
        assert report.iterations <= 2
        assert validate(schedule, inst) == []

    def test_report_uses_the_evaluator_config(self, small_instance):
        eval_cfg = EvaluatorConfig(nurse_capacity=1)
        try:
            schedule, report = run_lpha(
                small_instance, WEIGHTS, LphaConfig(max_iterations=10), seed=0, eval_cfg=eval_cfg
            )
        except NoConvergence as exc:
            schedule, report = exc.schedule, exc.report
        assert report.objective == pytest.approx(
            expected_objective(schedule, small_instance, WEIGHTS, cfg=eval_cfg)
        )
        assert report.decomposition['objective'] == pytest.approx(report.objective)

    def test_strict_overtime_single_scenario(self):
        inst = make_instance([[10, 10, 10]], [[30, 30, 30]], shift_length=60, overtime_limit=60)
        schedule, report = run_lpha(inst, WEIGHTS, seed=0, eval_cfg=STRICT)
        assert report.converged
        assert report.objective == pytest.approx(0.3 * 60)
        assert validate(schedule, inst) == []

    @pytest.mark.slow
    @pytest.mark.parametrize('seed', range(6))
    def test_strict_overtime_returns_feasible_schedules(self, seed):
        inst = generate_instance(spec=GenSpec(num_patients=6, num_scenarios=3, seed=seed))
        try:
            schedule, _ = run_lpha(
                inst, WEIGHTS, LphaConfig(max_iterations=5), seed=0, eval_cfg=STRICT
            )
        except NoConvergence as exc:
            schedule = exc.schedule
        except Infeasible:
            return
        # raises OvertimeLimitExceeded if any scenario breaks the limit
        expected_objective(schedule, inst, WEIGHTS, cfg=STRICT)

    def test_reproducible(self, small_instance):
        cfg = LphaConfig(max_iterations=15, fix_start_iter=5)
        first, first_report = solve_lpha(small_instance, WEIGHTS, cfg, seed=4)
        second, second_report = solve_lpha(small_instance, WEIGHTS, cfg, seed=4)
        assert first == second
        assert first_report.iterations == second_report.iterations
        assert first_report.rho_trace == second_report.rho_trace

    def test_traces_cover_every_iteration(self, small_instance):
        cfg = LphaConfig(max_iterations=15, fix_start_iter=5)
        schedule, report = solve_lpha(small_instance, WEIGHTS, cfg, seed=1)
        assert len(report.rho_trace) == report.iterations
        assert len(report.delta_p_trace) == report.iterations
        assert report.delta_p_trace[0] is None
        assert len(report.fixed_trace) == report.iterations
        assert validate(schedule, small_instance) == []

    @pytest.mark.slow
    def test_parallel_matches_serial(self, small_instance):
        cfg = LphaConfig(max_iterations=10)
        serial, _ = solve_lpha(small_instance, WEIGHTS, cfg, seed=2)
        parallel, _ = solve_lpha(
            small_instance, WEIGHTS, LphaConfig(max_iterations=10, workers=2), seed=2
        )
        assert serial == parallel
