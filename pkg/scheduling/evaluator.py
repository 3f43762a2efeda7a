"""Second-stage evaluation of a fixed first-stage schedule.

``evaluate`` applies the first-available chair-and-nurse rule in sequence
order. ``brute_force_second_stage`` enumerates every nurse/chair assignment
(up to relabelling of identical resources) and serves as the oracle.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional

import numpy as np

from .core import FirstStageSchedule, ObjectiveWeights, Scenario, SecondStageOutcome
from .exceptions import InstanceTooLarge, OvertimeLimitExceeded

logger = logging.getLogger(__name__)

TIE_BREAKS = ('latest', 'first')
BRUTE_FORCE_LIMITS = {'patients': 7, 'nurses': 3, 'chairs': 4}
UNIT_WEIGHTS = ObjectiveWeights(1.0, 1.0, 1.0)


@dataclass(frozen=True)
class EvaluatorConfig:
    nurse_capacity: Optional[int] = None
    strict_overtime: bool = False
    tie_break: str = 'latest'

    def __post_init__(self):
        if self.nurse_capacity is not None and self.nurse_capacity < 1:
            raise ValueError('nurse_capacity must be at least 1')
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f'tie_break must be one of {TIE_BREAKS}')

    def relaxed(self):
        """Same rules, reporting overtime above L instead of raising."""
        return replace(self, strict_overtime=False)


DEFAULT_CONFIG = EvaluatorConfig()


@dataclass
class ResourceState:
    nurse_free_at: list
    chair_free_at: list
    nurse_discharges: list = field(default_factory=list)
    processed: int = 0

    @classmethod
    def empty(cls, num_nurses, num_chairs):
        return cls(
            nurse_free_at=[0] * num_nurses,
            chair_free_at=[0] * num_chairs,
            nurse_discharges=[[] for _ in range(num_nurses)],
        )

    def nurse_last_discharge(self, nurse):
        discharges = self.nurse_discharges[nurse]
        return max(discharges) if discharges else 0

    def nurse_ready(self, capacity=None):
        """Earliest time each nurse can take the next patient."""
        if capacity is None:
            return list(self.nurse_free_at)
        ready = []
        for free_at, discharges in zip(self.nurse_free_at, self.nurse_discharges):
            if len(discharges) >= capacity:
                free_at = max(free_at, sorted(discharges)[len(discharges) - capacity])
            ready.append(free_at)
        return ready

    def place(self, nurse, chair, start, premed, infusion):
        discharge = start + premed + infusion
        self.nurse_free_at[nurse] = start + premed
        self.nurse_discharges[nurse].append(discharge)
        self.chair_free_at[chair] = discharge
        self.processed += 1
        return discharge


def _pick(ready, last, at, tie_break):
    candidates = [k for k, value in enumerate(ready) if value <= at]
    if tie_break == 'first':
        return min(candidates, key=lambda k: (ready[k], k))
    return min(candidates, key=lambda k: (-last[k], k))


def _summarize(start, wait, discharge, nurse_of, chair_of, scenario, inst, weights):
    H = inst.shift_length
    last_by_nurse = [0] * inst.num_nurses
    last_by_chair = [0] * inst.num_chairs
    busy_by_chair = [0] * inst.num_chairs
    for patient, d in enumerate(discharge):
        nurse, chair = nurse_of[patient], chair_of[patient]
        if d > last_by_nurse[nurse]:
            last_by_nurse[nurse] = d
        if d > last_by_chair[chair]:
            last_by_chair[chair] = d
        busy_by_chair[chair] += scenario.premed[patient] + scenario.infusion[patient]

    overtime = sorted((max(0, last - H) for last in last_by_nurse), reverse=True)
    idle = [max(H, last) - busy for last, busy in zip(last_by_chair, busy_by_chair)]
    feasible = overtime[0] <= inst.overtime_limit
    objective = (
        weights.lambda_wait * sum(wait)
        + weights.lambda_overtime * sum(overtime)
        + weights.lambda_idle * sum(idle)
    )
    return SecondStageOutcome(
        start=tuple(start),
        wait=tuple(wait),
        discharge=tuple(discharge),
        nurse_of=tuple(nurse_of),
        chair_of=tuple(chair_of),
        overtime=tuple(overtime),
        idle=tuple(idle),
        objective=objective,
        feasible=feasible,
    )


def evaluate(
    schedule: FirstStageSchedule,
    scenario: Scenario,
    inst,
    cfg: Optional[EvaluatorConfig] = None,
    weights: Optional[ObjectiveWeights] = None,
) -> SecondStageOutcome:
    """Optimal-by-rule second stage for one scenario.

    Each patient, in sequence order, starts at the latest of its appointment,
    the previous patient's start, the earliest ready nurse and the earliest
    free chair. ``weights`` only sets ``outcome.objective`` (unit weights
    when omitted).
    """
    cfg = cfg or DEFAULT_CONFIG
    weights = weights or UNIT_WEIGHTS
    n = inst.num_patients
    state = ResourceState.empty(inst.num_nurses, inst.num_chairs)
    start, wait, discharge = [0] * n, [0] * n, [0] * n
    nurse_of, chair_of = [0] * n, [0] * n
    nurse_last = [0] * inst.num_nurses

    previous = 0
    for patient in schedule.sequence:
        a = schedule.appointment[patient]
        ready = state.nurse_ready(cfg.nurse_capacity)
        at = max(a, previous, min(ready), min(state.chair_free_at))
        nurse = _pick(ready, nurse_last, at, cfg.tie_break)
        chair = _pick(state.chair_free_at, state.chair_free_at, at, cfg.tie_break)

        d = state.place(nurse, chair, at, scenario.premed[patient], scenario.infusion[patient])
        if d > nurse_last[nurse]:
            nurse_last[nurse] = d
        start[patient], wait[patient], discharge[patient] = at, at - a, d
        nurse_of[patient], chair_of[patient] = nurse, chair
        previous = at

    outcome = _summarize(start, wait, discharge, nurse_of, chair_of, scenario, inst, weights)
    if cfg.strict_overtime and not outcome.feasible:
        raise OvertimeLimitExceeded(outcome.overtime[0], inst.overtime_limit)
    return outcome


@lru_cache(maxsize=None)
def _labelings(length, groups):
    """Restricted-growth strings: assignments of ordered items to unlabelled groups."""
    found = []

    def extend(prefix, used):
        if len(prefix) == length:
            found.append(tuple(prefix))
            return
        for label in range(min(used + 1, groups)):
            prefix.append(label)
            extend(prefix, max(used, label + 1))
            prefix.pop()

    extend([], 0)
    return tuple(found)


def brute_force_second_stage(schedule, scenario, inst, weights=None):
    """Exhaustive second stage: minimum objective over all assignments.

    Each assignment is timed by earliest-start propagation: a patient starts
    once its appointment, the previous patient's start, its nurse's last
    pre-medication and its chair's last discharge have all passed.
    """
    n, num_nurses, num_chairs = inst.num_patients, inst.num_nurses, inst.num_chairs
    if (
        n > BRUTE_FORCE_LIMITS['patients']
        or num_nurses > BRUTE_FORCE_LIMITS['nurses']
        or num_chairs > BRUTE_FORCE_LIMITS['chairs']
    ):
        raise InstanceTooLarge(
            f'Brute force supports at most {BRUTE_FORCE_LIMITS}, got '
            f'{n} patients, {num_nurses} nurses, {num_chairs} chairs'
        )
    weights = weights or UNIT_WEIGHTS
    H, L = inst.shift_length, inst.overtime_limit
    order = schedule.sequence
    appointment = [schedule.appointment[p] for p in order]
    premed = [scenario.premed[p] for p in order]
    infusion = [scenario.infusion[p] for p in order]
    busy = [s + t for s, t in zip(premed, infusion)]
    total_busy = sum(busy)

    best_key, best = None, None
    for nurse_labels in _labelings(n, num_nurses):
        for chair_labels in _labelings(n, num_chairs):
            nurse_free = [0] * num_nurses
            nurse_last = [0] * num_nurses
            chair_free = [0] * num_chairs
            previous = 0
            total_wait = 0
            starts = []
            for k in range(n):
                nurse, chair = nurse_labels[k], chair_labels[k]
                at = max(appointment[k], previous, nurse_free[nurse], chair_free[chair])
                d = at + busy[k]
                nurse_free[nurse] = at + premed[k]
                if d > nurse_last[nurse]:
                    nurse_last[nurse] = d
                chair_free[chair] = d
                total_wait += at - appointment[k]
                starts.append(at)
                previous = at
            overtime = [max(0, last - H) for last in nurse_last]
            idle = sum(max(H, last) for last in chair_free) - total_busy
            objective = (
                weights.lambda_wait * total_wait
                + weights.lambda_overtime * sum(overtime)
                + weights.lambda_idle * idle
            )
            feasible = max(overtime) <= L
            key = (not feasible, objective)
            if best_key is None or key < best_key:
                best_key, best = key, (nurse_labels, chair_labels, starts)

    nurse_labels, chair_labels, starts = best
    start, wait, discharge = [0] * n, [0] * n, [0] * n
    nurse_of, chair_of = [0] * n, [0] * n
    for k, patient in enumerate(order):
        start[patient] = starts[k]
        wait[patient] = starts[k] - appointment[k]
        discharge[patient] = starts[k] + busy[k]
        nurse_of[patient] = nurse_labels[k]
        chair_of[patient] = chair_labels[k]
    return _summarize(start, wait, discharge, nurse_of, chair_of, scenario, inst, weights)


def nurse_load_profile(outcome, scenario, inst, horizon=None):
    """Array [nurse, minute] counting patients in treatment with each nurse."""
    if horizon is None:
        horizon = max([inst.shift_length, *outcome.discharge])
    profile = np.zeros((inst.num_nurses, horizon), dtype=int)
    for patient, nurse in enumerate(outcome.nurse_of):
        profile[nurse, outcome.start[patient] : outcome.discharge[patient]] += 1
    return profile


def earliest_starts(sequence, premed, infusion, inst, cfg=None):
    """Start times when every patient is available at minute zero.

    Used as zero-wait appointment times: appointing each patient at its
    returned start reproduces the same second stage with no waiting.
    """
    scenario = Scenario(premed=premed, infusion=infusion, probability=1.0)
    schedule = FirstStageSchedule(sequence=tuple(sequence), appointment=(0,) * len(premed))
    return evaluate(schedule, scenario, inst, (cfg or DEFAULT_CONFIG).relaxed()).start
