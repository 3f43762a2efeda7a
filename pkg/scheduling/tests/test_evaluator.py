import numpy as np
import pytest

from scheduling.core import FirstStageSchedule, ObjectiveWeights, Scenario
from scheduling.evaluator import (
    EvaluatorConfig,
    brute_force_second_stage,
    earliest_starts,
    evaluate,
    nurse_load_profile,
)
from scheduling.exceptions import InstanceTooLarge, OvertimeLimitExceeded
from scheduling.generator import TABLE_CLASS_MODEL, draw_class

from .conftest import make_instance

WAIT_ONLY = ObjectiveWeights(1, 0, 0)
UNIT = ObjectiveWeights(1, 1, 1)


def random_case(rng, shift_length=240):
    """One-scenario case with an overtime limit loose enough to keep every assignment feasible."""
    n = int(rng.integers(1, 6))
    nurses = int(rng.integers(1, 3))
    chairs = int(rng.integers(1, 4))
    premed = rng.integers(0, 15, size=n).tolist()
    infusion = rng.integers(5, 60, size=n).tolist()
    inst = make_instance(
        [premed],
        [infusion],
        nurses=nurses,
        chairs=chairs,
        shift_length=shift_length,
        overtime_limit=1000,
    )
    sequence = tuple(int(i) for i in rng.permutation(n))
    times = sorted(rng.integers(0, 90, size=n).tolist())
    appointment = [0] * n
    for patient, value in zip(sequence, times):
        appointment[patient] = value
    return inst, FirstStageSchedule(sequence, tuple(appointment))


def clinic_case(rng):
    """One-scenario case with class-model durations and a 240-minute shift."""
    n = int(rng.integers(1, 6))
    classes = [TABLE_CLASS_MODEL.get(draw_class(u)) for u in rng.random(n)]
    premed = [int(rng.integers(c.premed[0], c.premed[1] + 1)) for c in classes]
    infusion = [int(rng.integers(c.infusion[0], c.infusion[1] + 1)) for c in classes]
    inst = make_instance(
        [premed],
        [infusion],
        nurses=int(rng.integers(1, 3)),
        chairs=int(rng.integers(1, 4)),
        overtime_limit=10000,
    )
    sequence = tuple(int(i) for i in rng.permutation(n))
    times = sorted(rng.integers(0, 240, size=n).tolist())
    appointment = [0] * n
    for patient, value in zip(sequence, times):
        appointment[patient] = value
    return inst, FirstStageSchedule(sequence, tuple(appointment))


class TestEvaluate:
    def test_single_patient(self, single_patient):
        schedule = FirstStageSchedule((0,), (0,))
        outcome = evaluate(schedule, single_patient.scenarios[0], single_patient)
        assert outcome.start == (0,)
        assert outcome.wait == (0,)
        assert outcome.discharge == (40,)
        assert outcome.overtime == (0,)
        assert outcome.idle == (200,)
        assert outcome.objective == 200
        assert outcome.feasible

    def test_chair_busy_delays_second_patient(self):
        inst = make_instance([[10, 5]], [[20, 30]])
        schedule = FirstStageSchedule((0, 1), (0, 10))
        outcome = evaluate(schedule, inst.scenarios[0], inst)
        assert outcome.start == (0, 30)
        assert outcome.wait == (0, 20)
        assert outcome.discharge == (30, 65)
        assert outcome.overtime == (0,)
        assert outcome.idle == (175,)
        exact = brute_force_second_stage(schedule, inst.scenarios[0], inst)
        assert exact.objective == outcome.objective

    def test_nurse_busy_with_premedication(self, two_patients):
        schedule = FirstStageSchedule((0, 1), (0, 0))
        outcome = evaluate(schedule, two_patients.scenarios[0], two_patients)
        assert outcome.start == (0, 10)
        assert outcome.wait == (0, 10)
        assert outcome.discharge == (40, 35)
        assert outcome.chair_of == (0, 1)
        assert sorted(outcome.idle) == [200, 215]

    def test_overtime(self):
        inst = make_instance([[10]], [[100]], shift_length=60)
        outcome = evaluate(FirstStageSchedule((0,), (0,)), inst.scenarios[0], inst)
        assert outcome.overtime == (50,)
        assert outcome.idle == (0,)
        assert outcome.feasible

    def test_overtime_limit(self):
        inst = make_instance([[10]], [[100]], shift_length=60, overtime_limit=20)
        schedule = FirstStageSchedule((0,), (0,))
        assert not evaluate(schedule, inst.scenarios[0], inst).feasible
        with pytest.raises(OvertimeLimitExceeded):
            evaluate(schedule, inst.scenarios[0], inst, EvaluatorConfig(strict_overtime=True))

    def test_overtime_sorted_non_increasing(self):
        inst = make_instance([[5, 5]], [[100, 200]], nurses=2, chairs=2, shift_length=60)
        outcome = evaluate(FirstStageSchedule((0, 1), (0, 0)), inst.scenarios[0], inst)
        assert list(outcome.overtime) == sorted(outcome.overtime, reverse=True)
        assert outcome.overtime == (145, 45)

    def test_unused_chair_is_idle_all_shift(self, single_patient):
        inst = single_patient.with_resources(1, 3)
        outcome = evaluate(FirstStageSchedule((0,), (0,)), inst.scenarios[0], inst)
        assert sorted(outcome.idle) == [200, 240, 240]

    def test_tie_break_changes_chairs_not_starts(self):
        inst = make_instance([[0, 0, 0]], [[10, 20, 30]], nurses=2, chairs=2)
        schedule = FirstStageSchedule((0, 1, 2), (0, 0, 30))
        latest = evaluate(schedule, inst.scenarios[0], inst)
        first = evaluate(schedule, inst.scenarios[0], inst, EvaluatorConfig(tie_break='first'))
        assert latest.start == first.start
        assert latest.chair_of[2] == 1
        assert first.chair_of[2] == 0

    def test_nurse_capacity(self):
        inst = make_instance([[5, 5]], [[50, 10]], nurses=1, chairs=3)
        schedule = FirstStageSchedule((0, 1), (0, 0))
        assert evaluate(schedule, inst.scenarios[0], inst).start == (0, 5)
        limited = evaluate(schedule, inst.scenarios[0], inst, EvaluatorConfig(nurse_capacity=1))
        assert limited.start == (0, 55)

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            EvaluatorConfig(nurse_capacity=0)
        with pytest.raises(ValueError):
            EvaluatorConfig(tie_break='random')

    def test_starts_follow_sequence(self, small_instance):
        schedule = FirstStageSchedule((2, 0, 3, 1), (0, 0, 0, 0))
        for scenario in small_instance.scenarios:
            outcome = evaluate(schedule, scenario, small_instance)
            starts = [outcome.start[i] for i in schedule.sequence]
            assert starts == sorted(starts)
            assert all(w >= 0 for w in outcome.wait)

    def test_longer_premedication_never_advances_later_starts(self, small_instance):
        schedule = FirstStageSchedule((0, 1, 2, 3), (0, 0, 0, 0))
        scenario = small_instance.scenarios[0]
        slower = Scenario(
            (scenario.premed[0] + 15,) + scenario.premed[1:], scenario.infusion, 1.0
        )
        base = evaluate(schedule, scenario, small_instance)
        delayed = evaluate(schedule, slower, small_instance)
        assert all(d >= b for d, b in zip(delayed.start, base.start))


def test_delaying_one_appointment_shifts_starts_by_at_most_the_delay():
    rng = np.random.default_rng(31)
    for _ in range(100):
        inst, schedule = random_case(rng)
        scenario = inst.scenarios[0]
        base = evaluate(schedule, scenario, inst).start
        patient = int(rng.integers(inst.num_patients))
        delay = int(rng.integers(1, 40))
        appointment = list(schedule.appointment)
        appointment[patient] += delay
        delayed = evaluate(
            FirstStageSchedule(schedule.sequence, appointment), scenario, inst
        ).start
        assert all(b <= d <= b + delay for b, d in zip(base, delayed))


class TestEarliestStarts:
    def test_zero_wait_when_appointed_at_starts(self, small_instance):
        sequence = (3, 1, 0, 2)
        scenario = small_instance.scenarios[1]
        starts = earliest_starts(sequence, scenario.premed, scenario.infusion, small_instance)
        outcome = evaluate(FirstStageSchedule(sequence, starts), scenario, small_instance)
        assert outcome.wait == (0, 0, 0, 0)
        assert outcome.start == starts


class TestBruteForce:
    def test_matches_evaluate_on_waiting(self):
        rng = np.random.default_rng(2024)
        for _ in range(500):
            inst, schedule = random_case(rng)
            scenario = inst.scenarios[0]
            exact = brute_force_second_stage(schedule, scenario, inst, WAIT_ONLY)
            outcome = evaluate(schedule, scenario, inst, weights=WAIT_ONLY)
            assert outcome.objective == exact.objective

    def test_matches_evaluate_within_shift(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            inst, schedule = random_case(rng, shift_length=1000)
            scenario = inst.scenarios[0]
            exact = brute_force_second_stage(schedule, scenario, inst, UNIT)
            outcome = evaluate(schedule, scenario, inst, weights=UNIT)
            assert outcome.objective == exact.objective

    def test_lower_bounds_evaluate(self):
        rng = np.random.default_rng(99)
        for _ in range(200):
            inst, schedule = random_case(rng, shift_length=60)
            scenario = inst.scenarios[0]
            outcome = evaluate(schedule, scenario, inst, weights=UNIT)
            exact = brute_force_second_stage(schedule, scenario, inst, UNIT)
            assert outcome.feasible and exact.feasible
            assert exact.objective <= outcome.objective + 1e-9

    def test_clinic_sized_cases(self):
        rng = np.random.default_rng(240)
        within_shift = 0
        for _ in range(500):
            inst, schedule = clinic_case(rng)
            scenario = inst.scenarios[0]
            outcome = evaluate(schedule, scenario, inst, weights=UNIT)
            exact = brute_force_second_stage(schedule, scenario, inst, UNIT)
            # first-available starts are the earliest any assignment allows
            assert all(e >= g for e, g in zip(exact.start, outcome.start))
            assert sum(exact.wait) >= sum(outcome.wait)
            assert exact.objective <= outcome.objective
            if max(outcome.discharge) <= inst.shift_length:
                within_shift += 1
                assert exact.objective == outcome.objective
            # waiting alone is never improved on
            wait_only = brute_force_second_stage(schedule, scenario, inst, WAIT_ONLY)
            assert wait_only.objective == sum(outcome.wait)
        assert within_shift > 0

    def test_too_large(self):
        inst = make_instance([[1] * 8], [[5] * 8])
        schedule = FirstStageSchedule(tuple(range(8)), (0,) * 8)
        with pytest.raises(InstanceTooLarge):
            brute_force_second_stage(schedule, inst.scenarios[0], inst)


def test_nurse_load_profile(two_patients):
    scenario = two_patients.scenarios[0]
    outcome = evaluate(FirstStageSchedule((0, 1), (0, 0)), scenario, two_patients)
    profile = nurse_load_profile(outcome, scenario, two_patients)
    assert profile.shape == (1, 240)
    assert profile[0, 5] == 1
    assert profile[0, 20] == 2
    assert profile[0, 39] == 1
    assert profile[0, 40] == 0
