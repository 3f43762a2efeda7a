import pytest

from scheduling.core import ObjectiveWeights, expected_objective, validate
from scheduling.exceptions import TooFewSamples
from scheduling.generator import GenSpec, generate_instance
from scheduling.heuristics import (
    HedgingConfig,
    SequencingRule,
    baseline_slot_schedule,
    estimated_durations,
    fixed_sequence_opt,
    job_hedging_schedule,
    percentile,
    sequence_patients,
)

from .conftest import make_instance

WEIGHTS = ObjectiveWeights(0.1, 0.8, 0.1)


@pytest.fixture
def spread():
    # total durations per scenario: p0 (40, 60), p1 (20, 20), p2 (70, 90)
    return make_instance([[0, 0, 0], [0, 0, 0]], [[40, 20, 70], [60, 20, 90]], chairs=2)


class TestSequencing:
    def test_spt_and_lpt(self):
        inst = make_instance([[10, 5, 20]], [[40, 15, 60]])
        assert sequence_patients(inst, 'spt') == (1, 0, 2)
        assert sequence_patients(inst, 'lpt') == (2, 0, 1)

    def test_variance_ties_break_by_id(self, spread):
        assert sequence_patients(spread, SequencingRule.VAR) == (1, 0, 2)

    def test_coefficient_of_variation(self, spread):
        assert sequence_patients(spread, SequencingRule.COV) == (1, 2, 0)

    def test_parse(self):
        assert SequencingRule.parse('CoV') is SequencingRule.COV
        assert SequencingRule.parse(' SPT ') is SequencingRule.SPT
        assert str(SequencingRule.COV) == 'CoV'
        assert str(SequencingRule.LPT) == 'LPT'
        with pytest.raises(ValueError):
            SequencingRule.parse('edd')


class TestPercentile:
    samples = list(range(1, 11))

    def test_median(self):
        assert percentile(self.samples, 0.5) == 5

    def test_extremes(self):
        assert percentile(self.samples, 0) == 1
        assert percentile(self.samples, 1) == 10

    def test_descending_convention(self):
        assert percentile(self.samples, 0.5, 'descending') == 6

    def test_empty(self):
        with pytest.raises(TooFewSamples):
            percentile([], 0.5)

    def test_config_range(self):
        with pytest.raises(ValueError):
            HedgingConfig(percentile=1.5)
        with pytest.raises(ValueError):
            HedgingConfig(convention='middle')


class TestJobHedging:
    def test_samples_pool_within_a_class(self):
        inst = make_instance([[10, 20], [30, 40]], [[50, 60], [70, 80]])
        premed, infusion = estimated_durations(inst, HedgingConfig(0.5))
        assert premed == (20, 20)
        assert infusion == (60, 60)

    @pytest.mark.parametrize('rule', list(SequencingRule))
    def test_schedules_are_valid(self, small_instance, rule):
        schedule = job_hedging_schedule(small_instance, rule, HedgingConfig(0.6))
        assert validate(schedule, small_instance) == []
        assert schedule.sequence == sequence_patients(small_instance, rule)


class TestBaseline:
    def test_two_slots(self):
        inst = generate_instance(spec=GenSpec(num_patients=8, num_scenarios=2, seed=3))
        schedule = baseline_slot_schedule(inst)
        assert schedule.sequence == sequence_patients(inst, 'lpt')
        starts = [schedule.appointment[i] for i in schedule.sequence]
        assert starts == [0, 0, 0, 0, 150, 150, 150, 150]
        assert validate(schedule, inst) == []

    def test_requires_slots(self, small_instance):
        with pytest.raises(ValueError):
            baseline_slot_schedule(small_instance, slot_starts=())


class TestFixedSequenceOpt:
    def test_never_worse_than_its_start(self, small_instance):
        hedged = job_hedging_schedule(small_instance, 'var', HedgingConfig(0.5))
        improved = fixed_sequence_opt(
            small_instance, WEIGHTS, hedged.sequence, starts=[hedged.appointment]
        )
        assert improved.sequence == hedged.sequence
        assert validate(improved, small_instance) == []
        assert expected_objective(improved, small_instance, WEIGHTS) <= (
            expected_objective(hedged, small_instance, WEIGHTS) + 1e-9
        )

    def test_zero_budget_keeps_best_start(self, small_instance):
        sequence = (0, 1, 2, 3)
        start = (0, 10, 20, 30)
        best = fixed_sequence_opt(
            small_instance,
            WEIGHTS,
            sequence,
            budget=0,
            starts=[start],
            include_default_starts=False,
        )
        assert best.appointment == start

    def test_rejects_non_permutation(self, small_instance):
        with pytest.raises(ValueError):
            fixed_sequence_opt(small_instance, WEIGHTS, (0, 1, 1, 3))

    def test_needs_a_start(self, small_instance):
        with pytest.raises(ValueError):
            fixed_sequence_opt(small_instance, WEIGHTS, (0, 1, 2, 3), include_default_starts=False)
