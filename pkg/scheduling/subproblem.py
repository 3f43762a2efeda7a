"""Single-scenario subproblem with augmented-Lagrangian penalty terms.

The outer search walks patient sequences (all permutations, or a swap and
insertion neighbourhood). For each sequence an integer coordinate descent
sets the appointment times.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import FirstStageSchedule, ObjectiveWeights, SecondStageOutcome
from .evaluator import DEFAULT_CONFIG, earliest_starts, evaluate
from .exceptions import Infeasible, InstanceTooLarge

logger = logging.getLogger(__name__)

MODES = ('local_search', 'exhaustive')
EXHAUSTIVE_LIMIT = 8
DEFAULT_RESTARTS = 3
IMPROVEMENT_TOLERANCE = 1e-9


def cut_value(a, point):
    """Tangent of a**2 at ``point``, evaluated at ``a``."""
    return point * point + 2 * point * (a - point)


def quadratic_estimate(a, cuts):
    if not cuts:
        return a * a
    return max(cut_value(a, point) for point in cuts)


def extend_cuts(cuts, points, closed=frozenset()):
    """Add one operating point per patient.

    Patients in ``closed`` keep their pool, and a point already in a pool is
    not added again.
    """
    return tuple(
        existing if patient in closed or point in existing else existing + (point,)
        for patient, (existing, point) in enumerate(zip(cuts, points))
    )


def repeated_points(cuts, points):
    """Patients whose operating point equals the latest cut in their pool."""
    return {
        patient
        for patient, (existing, point) in enumerate(zip(cuts, points))
        if existing and existing[-1] == point
    }


@dataclass(frozen=True)
class PenaltyTerms:
    mu: tuple
    rho: float
    consensus: tuple
    cuts: tuple

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError('rho must be non-negative')
        object.__setattr__(self, 'mu', tuple(float(m) for m in self.mu))
        object.__setattr__(self, 'consensus', tuple(float(c) for c in self.consensus))
        object.__setattr__(self, 'cuts', tuple(tuple(c) for c in self.cuts))

    @classmethod
    def none(cls, n):
        return cls(mu=(0.0,) * n, rho=0.0, consensus=(0.0,) * n, cuts=((),) * n)

    @property
    def active(self):
        return self.rho > 0 or any(self.mu)

    def with_cut(self, points):
        return PenaltyTerms(self.mu, self.rho, self.consensus, extend_cuts(self.cuts, points))

    def stabilized(self, points):
        return len(repeated_points(self.cuts, points)) == len(self.cuts)

    def penalty(self, appointment):
        linear = 0.0
        quadratic = 0.0
        for a, mu, a_hat, cuts in zip(appointment, self.mu, self.consensus, self.cuts):
            linear += mu * (a - a_hat)
            quadratic += quadratic_estimate(a, cuts) - 2 * a * a_hat + a_hat * a_hat
        return linear + self.rho / 2 * quadratic


@dataclass(frozen=True)
class SubproblemSolution:
    """Best schedule found for one scenario.

    ``ot_idle_lb`` holds the weighted overtime-plus-idle part of the base
    objective. Recorded at the penalty-free first iteration it bounds the
    same part of every later solve of the scenario from below.
    """

    schedule: FirstStageSchedule
    base_objective: float
    penalized_objective: float
    ot_idle_lb: float
    outcome: SecondStageOutcome


def penalized_cost(schedule, scenario, inst, w, terms, cfg=None):
    outcome = evaluate(schedule, scenario, inst, cfg, weights=w)
    return outcome.objective + terms.penalty(schedule.appointment)


def overtime_lb(scenario, inst):
    """Minimum overtime of the nurse discharging the last patient."""
    return max(0.0, scenario.total() / inst.num_chairs - inst.shift_length)


def idle_lb(scenario, inst):
    H, C = inst.shift_length, inst.num_chairs
    durations = scenario.durations
    total = sum(durations)
    makespan = max(total / C, max(durations, default=0))
    return max(0.0, (C - 1) * H + max(H, makespan) - total)


def base_lower_bound(scenario, inst, w):
    return w.lambda_overtime * overtime_lb(scenario, inst) + w.lambda_idle * idle_lb(
        scenario, inst
    )


class _Costing:
    """Penalized cost of (sequence, appointment) pairs for one scenario."""

    def __init__(self, scenario, inst, w, terms, cfg):
        self.scenario = scenario
        self.inst = inst
        self.w = w
        self.terms = terms
        # candidates over L cost inf instead of raising in strict mode
        self.cfg = (cfg or DEFAULT_CONFIG).relaxed()
        self.evaluations = 0

    def __call__(self, sequence, appointment):
        self.evaluations += 1
        schedule = FirstStageSchedule(sequence, appointment)
        outcome = evaluate(schedule, self.scenario, self.inst, self.cfg, weights=self.w)
        if not outcome.feasible:
            return math.inf, outcome
        cost = outcome.objective
        if self.terms.active:
            cost += self.terms.penalty(appointment)
        return cost, outcome

    def zero_wait(self, sequence):
        return earliest_starts(
            sequence, self.scenario.premed, self.scenario.infusion, self.inst, self.cfg
        )


def _clamp_to_sequence(sequence, appointment, fixed, horizon):
    """Monotone appointments along ``sequence`` honouring fixed values.

    Returns None when the fixed values cannot be ordered along the sequence.
    """
    fixed = fixed or {}
    n = len(sequence)
    upper = [horizon] * (n + 1)
    for pos in range(n - 1, -1, -1):
        patient = sequence[pos]
        upper[pos] = min(upper[pos + 1], fixed.get(patient, horizon))

    result = [0] * n
    previous = 0
    for pos, patient in enumerate(sequence):
        if patient in fixed:
            value = fixed[patient]
            if value < previous:
                return None
        else:
            value = min(max(int(appointment[patient]), previous), upper[pos])
        result[patient] = value
        previous = value
    return tuple(result)


def optimize_timing(
    sequence,
    scenario,
    inst,
    w,
    terms=None,
    start=None,
    fixed=None,
    cfg=None,
    costing=None,
):
    """Integer coordinate descent on appointment times for a fixed sequence.

    Each free patient moves within the window set by its sequence neighbours
    and [0, H + L]; a move in either direction doubles its step while the
    cost strictly improves, then halves back down to one minute. Passes
    repeat until none improves. Returns (appointment, cost, outcome); the
    cost is infinite when no feasible timing is found.
    """
    sequence = tuple(sequence)
    terms = terms or PenaltyTerms.none(inst.num_patients)
    costing = costing or _Costing(scenario, inst, w, terms, cfg)
    fixed = fixed or {}
    horizon = inst.horizon

    if start is None:
        start = costing.zero_wait(sequence)
    clamped = _clamp_to_sequence(sequence, start, fixed, horizon)
    if clamped is None:
        return None, math.inf, None
    a = list(clamped)
    cost, outcome = costing(sequence, tuple(a))

    def attempt(patient, value):
        nonlocal cost, outcome
        previous = a[patient]
        a[patient] = value
        candidate, candidate_outcome = costing(sequence, tuple(a))
        if candidate < cost - IMPROVEMENT_TOLERANCE:
            cost, outcome = candidate, candidate_outcome
            return True
        a[patient] = previous
        return False

    last = len(sequence) - 1
    improved = True
    while improved:
        improved = False
        for pos, patient in enumerate(sequence):
            if patient in fixed:
                continue
            lo = a[sequence[pos - 1]] if pos > 0 else 0
            hi = a[sequence[pos + 1]] if pos < last else horizon
            for direction in (1, -1):
                step, moved = 1, False
                while True:
                    target = min(hi, max(lo, a[patient] + direction * step))
                    if target == a[patient] or not attempt(patient, target):
                        break
                    moved = True
                    step *= 2
                step //= 2
                while moved and step >= 1:
                    target = min(hi, max(lo, a[patient] + direction * step))
                    if target != a[patient]:
                        attempt(patient, target)
                    step //= 2
                if moved:
                    improved = True
                    break
    return tuple(a), cost, outcome


def _respect_fixed(schedule, fixed):
    """Warm-start sequence and times with fixed patients moved to their fixed times."""
    appointment = tuple(fixed.get(i, a) for i, a in enumerate(schedule.appointment))
    position = schedule.position()
    sequence = tuple(sorted(schedule.sequence, key=lambda i: (appointment[i], position[i])))
    return sequence, appointment


def lpt_order(scenario):
    durations = scenario.durations
    return tuple(sorted(range(len(durations)), key=lambda i: (-durations[i], i)))


def _neighbours(sequence):
    """Adjacent swaps, then single-patient insertions."""
    n = len(sequence)
    for pos in range(n - 1):
        candidate = list(sequence)
        candidate[pos], candidate[pos + 1] = candidate[pos + 1], candidate[pos]
        yield tuple(candidate)
    for source in range(n):
        for target in range(n):
            if abs(target - source) <= 1:
                continue
            candidate = list(sequence)
            candidate.insert(target, candidate.pop(source))
            yield tuple(candidate)


class _Search:
    def __init__(self, scenario, inst, w, terms, fixed, cfg, trace, bound):
        self.costing = _Costing(scenario, inst, w, terms, cfg)
        self.scenario = scenario
        self.inst = inst
        self.w = w
        self.terms = terms
        self.fixed = fixed
        self.cfg = cfg
        self.trace = trace
        self.bound = bound
        self.best = None

    def reached_bound(self):
        return self.bound is not None and self.best is not None and (
            self.best[1] <= self.bound + IMPROVEMENT_TOLERANCE
        )

    def descend(self, sequence, start=None):
        appointment, cost, outcome = optimize_timing(
            sequence,
            self.scenario,
            self.inst,
            self.w,
            self.terms,
            start=start,
            fixed=self.fixed,
            cfg=self.cfg,
            costing=self.costing,
        )
        if self.trace is not None:
            self.trace.append({'sequence': ' '.join(map(str, sequence)), 'cost': cost})
        if appointment is not None and (self.best is None or cost < self.best[1]):
            self.best = (tuple(sequence), cost, appointment, outcome)
        return appointment, cost

    def screen(self, sequence, appointment):
        """Cheap cost estimate of a neighbour before a full descent."""
        if self.terms.active:
            start = appointment
        else:
            start = self.costing.zero_wait(sequence)
        start = _clamp_to_sequence(sequence, start, self.fixed, self.inst.horizon)
        if start is None:
            return None, math.inf
        return start, self.costing(sequence, start)[0]

    def local_search(self, sequence, start=None):
        appointment, cost = self.descend(sequence, start)
        if appointment is None:
            return
        improved = True
        while improved and not self.reached_bound():
            improved = False
            for candidate in _neighbours(sequence):
                screened, screened_cost = self.screen(candidate, appointment)
                if screened_cost < cost - IMPROVEMENT_TOLERANCE:
                    new_appointment, new_cost = self.descend(candidate, screened)
                    if new_cost < cost - IMPROVEMENT_TOLERANCE:
                        sequence, appointment, cost = candidate, new_appointment, new_cost
                        improved = True
                        break

    def exhaustive(self):
        for sequence in itertools.permutations(range(self.inst.num_patients)):
            self.descend(sequence)
            if self.reached_bound():
                break


def solve_subproblem(
    scenario,
    inst,
    w: ObjectiveWeights,
    terms: Optional[PenaltyTerms] = None,
    mode: str = 'local_search',
    seed_sequence=None,
    warm_start: Optional[FirstStageSchedule] = None,
    fixed=None,
    rng=None,
    cfg=None,
    restarts: int = DEFAULT_RESTARTS,
    trace: Optional[list] = None,
) -> SubproblemSolution:
    """Best schedule for one scenario under the penalized objective.

    ``warm_start`` seeds the local search with a previous solution and skips
    the random restarts. ``trace``, when given, collects the best penalized
    cost reached per visited sequence.
    """
    if mode not in MODES:
        raise ValueError(f'mode must be one of {MODES}')
    n = inst.num_patients
    if mode == 'exhaustive' and n > EXHAUSTIVE_LIMIT:
        raise InstanceTooLarge(
            f'Exhaustive subproblem search supports at most {EXHAUSTIVE_LIMIT} patients'
        )
    terms = terms or PenaltyTerms.none(n)
    fixed = dict(fixed or {})
    if overtime_lb(scenario, inst) > inst.overtime_limit:
        raise Infeasible(
            f'Scenario workload forces more than {inst.overtime_limit} minutes of overtime'
        )

    bound = None if terms.active else base_lower_bound(scenario, inst, w)
    search = _Search(scenario, inst, w, terms, fixed, cfg, trace, bound)

    if mode == 'exhaustive':
        search.exhaustive()
    elif warm_start is not None:
        search.local_search(*_respect_fixed(warm_start, fixed))
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        seed = tuple(seed_sequence) if seed_sequence is not None else lpt_order(scenario)
        search.local_search(seed)
        for _ in range(restarts):
            if search.reached_bound():
                break
            search.local_search(tuple(int(i) for i in rng.permutation(n)))

    if search.best is None or math.isinf(search.best[1]):
        raise Infeasible('No sequence satisfies the nurse overtime limit')

    sequence, cost, appointment, outcome = search.best
    overtime, idle = sum(outcome.overtime), sum(outcome.idle)
    logger.debug(
        'Subproblem solved: cost %.4f after %d evaluations', cost, search.costing.evaluations
    )
    return SubproblemSolution(
        schedule=FirstStageSchedule(sequence, appointment),
        base_objective=outcome.objective,
        penalized_objective=cost,
        ot_idle_lb=w.lambda_overtime * overtime + w.lambda_idle * idle,
        outcome=outcome,
    )
