"""Benchmark schedules: sequencing rules, job hedging, slot practice and "-opt" timing."""
from __future__ import annotations

import enum
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import FirstStageSchedule
from .evaluator import DEFAULT_CONFIG, earliest_starts, evaluate
from .exceptions import Infeasible, TooFewSamples, ZeroMean
from .subproblem import optimize_timing

logger = logging.getLogger(__name__)

CONVENTIONS = ('ascending', 'descending')
DEFAULT_SLOT_STARTS = (0, 150)


class SequencingRule(enum.Enum):
    SPT = 'spt'
    LPT = 'lpt'
    VAR = 'var'
    COV = 'cov'

    def __str__(self):
        return self.name if self is not SequencingRule.COV else 'CoV'

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(
                f'Unknown sequencing rule {value!r}; choose from '
                + ', '.join(rule.value for rule in cls)
            ) from None


@dataclass(frozen=True)
class HedgingConfig:
    percentile: float = 0.5
    convention: str = 'ascending'

    def __post_init__(self):
        if not 0 <= self.percentile <= 1:
            raise ValueError('percentile must lie in [0, 1]')
        if self.convention not in CONVENTIONS:
            raise ValueError(f'convention must be one of {CONVENTIONS}')


def duration_statistics(inst):
    """Per-patient mean, variance and coefficient of variation of s + t over scenarios."""
    durations = inst.duration_matrix()
    mean = durations.mean(axis=0)
    variance = durations.var(axis=0)
    with np.errstate(divide='ignore', invalid='ignore'):
        cov = np.where(mean > 0, np.sqrt(variance) / mean, np.nan)
    return mean, variance, cov


def sequence_patients(inst, rule, exclude_zero_mean=False):
    rule = SequencingRule.parse(rule)
    mean, variance, cov = duration_statistics(inst)
    patients = range(inst.num_patients)

    if rule is SequencingRule.SPT:
        return tuple(sorted(patients, key=lambda i: (mean[i], i)))
    if rule is SequencingRule.LPT:
        return tuple(sorted(patients, key=lambda i: (-mean[i], i)))
    if rule is SequencingRule.VAR:
        return tuple(sorted(patients, key=lambda i: (variance[i], i)))

    zero = [i for i in patients if mean[i] == 0]
    if zero and not exclude_zero_mean:
        raise ZeroMean(f'Patients {zero} have zero mean treatment time')
    ranked = sorted((i for i in patients if mean[i] > 0), key=lambda i: (cov[i], i))
    return tuple(ranked + zero)


def percentile(samples, k, convention='ascending'):
    """Nearest-rank k-th percentile; k = 0 gives the first sorted sample."""
    if not len(samples):
        raise TooFewSamples('Percentile of an empty sample')
    ordered = sorted(samples, reverse=convention == 'descending')
    rank = math.ceil(k * len(ordered) - 1e-9)
    return ordered[max(rank, 1) - 1]


def class_samples(inst):
    """Pre-medication and infusion draws pooled per class over the instance's scenarios."""
    premed, infusion = defaultdict(list), defaultdict(list)
    for patient in inst.patients:
        for scenario in inst.scenarios:
            premed[patient.class_id].append(scenario.premed[patient.id])
            infusion[patient.class_id].append(scenario.infusion[patient.id])
    return {class_id: (premed[class_id], infusion[class_id]) for class_id in premed}


def estimated_durations(inst, cfg):
    samples = class_samples(inst)
    premed, infusion = [], []
    for patient in inst.patients:
        s_samples, t_samples = samples[patient.class_id]
        premed.append(percentile(s_samples, cfg.percentile, cfg.convention))
        infusion.append(max(1, percentile(t_samples, cfg.percentile, cfg.convention)))
    return tuple(premed), tuple(infusion)


def hedging_appointments(inst, sequence, cfg):
    """Appointments at the first estimated joint availability of a nurse and a chair."""
    premed, infusion = estimated_durations(inst, cfg)
    starts = earliest_starts(sequence, premed, infusion, inst)
    return tuple(min(value, inst.horizon) for value in starts)


def job_hedging_schedule(inst, rule, cfg: Optional[HedgingConfig] = None):
    cfg = cfg or HedgingConfig()
    sequence = sequence_patients(inst, rule, exclude_zero_mean=True)
    return FirstStageSchedule(sequence, hedging_appointments(inst, sequence, cfg))


def baseline_slot_schedule(inst, slot_starts=DEFAULT_SLOT_STARTS, rule=SequencingRule.LPT):
    """The clinic's slot practice: one patient per chair arrives at each slot start."""
    if not slot_starts:
        raise ValueError('At least one slot start is required')
    sequence = sequence_patients(inst, rule, exclude_zero_mean=True)
    appointment = [0] * inst.num_patients
    for position, patient in enumerate(sequence):
        slot = min(position // inst.num_chairs, len(slot_starts) - 1)
        appointment[patient] = min(int(slot_starts[slot]), inst.horizon)
    return FirstStageSchedule(sequence, tuple(appointment))


class _BudgetExhausted(Exception):
    pass


class _ExpectedCosting:
    """Expected objective of appointment vectors for one sequence, with a budget."""

    def __init__(self, inst, w, cfg=None):
        self.inst = inst
        self.w = w
        self.cfg = (cfg or DEFAULT_CONFIG).relaxed()
        self.evaluations = 0
        self.limit = None
        self.best = None

    def __call__(self, sequence, appointment):
        if self.limit is not None and self.evaluations >= self.limit:
            raise _BudgetExhausted
        self.evaluations += 1
        schedule = FirstStageSchedule(sequence, appointment)
        total = []
        for scenario in self.inst.scenarios:
            outcome = evaluate(schedule, scenario, self.inst, self.cfg, weights=self.w)
            if not outcome.feasible:
                total = None
                break
            total.append(scenario.probability * outcome.objective)
        cost = math.inf if total is None else math.fsum(total)
        if self.best is None or cost < self.best[1]:
            self.best = (tuple(appointment), cost)
        return cost, None


def fixed_sequence_opt(
    inst, w, sequence, budget=None, starts=None, cfg=None, include_default_starts=True
):
    """Best expected-objective appointment times found for a fixed sequence.

    Descends from zero-wait times under mean durations, from hedging times
    at the median (unless ``include_default_starts`` is off) and from any
    extra ``starts``. ``budget`` caps the number of expected-objective
    evaluations spent descending (None is unlimited, 0 keeps the best start).
    """
    sequence = tuple(sequence)
    if sorted(sequence) != list(range(inst.num_patients)):
        raise ValueError('sequence must be a permutation of patient ids')
    candidates = [tuple(start) for start in (starts or ())]
    if include_default_starts:
        mean = inst.mean_scenario()
        candidates += [
            earliest_starts(sequence, mean.premed, mean.infusion, inst),
            hedging_appointments(inst, sequence, HedgingConfig(0.5)),
        ]
    if not candidates:
        raise ValueError('No starting appointment vector to descend from')
    costing = _ExpectedCosting(inst, w, cfg)
    scored = []
    for start in candidates:
        start = tuple(min(max(int(v), 0), inst.horizon) for v in start)
        ordered = [start[i] for i in sequence]
        if any(b < a for a, b in zip(ordered, ordered[1:])):
            start = _monotone(sequence, start)
        scored.append((costing(sequence, start)[0], start))

    if budget != 0:
        costing.limit = None if budget is None else costing.evaluations + budget
        for _, start in sorted(scored, key=lambda item: item[0]):
            try:
                optimize_timing(sequence, None, inst, w, start=start, costing=costing)
            except _BudgetExhausted:
                logger.debug('Fixed-sequence budget of %s evaluations spent', budget)
                break

    appointment, cost = costing.best
    if math.isinf(cost):
        raise Infeasible('Every candidate timing violates the overtime limit in some scenario')
    return FirstStageSchedule(sequence, appointment)


def _monotone(sequence, appointment):
    result = list(appointment)
    previous = 0
    for patient in sequence:
        result[patient] = max(result[patient], previous)
        previous = result[patient]
    return tuple(result)
