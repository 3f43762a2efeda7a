"""Domain types and objective assembly shared by every solver.

All times are integer minutes measured from the start of the shift.
Objectives are reals.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import InvalidInstance

logger = logging.getLogger(__name__)

DEFAULT_SHIFT_LENGTH = 240
DEFAULT_OVERTIME_LIMIT = 180
PROBABILITY_TOLERANCE = 1e-9
PATIENT_CLASSES = (1, 2, 3, 4)


def _int_tuple(values):
    return tuple(int(v) for v in values)


@dataclass(frozen=True)
class Patient:
    id: int
    class_id: int = 1
    notes: str = ''

    def __post_init__(self):
        if self.class_id not in PATIENT_CLASSES:
            raise InvalidInstance(f'Patient {self.id} has unknown class {self.class_id}')


@dataclass(frozen=True)
class Scenario:
    premed: tuple
    infusion: tuple
    probability: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'premed', _int_tuple(self.premed))
        object.__setattr__(self, 'infusion', _int_tuple(self.infusion))
        if len(self.premed) != len(self.infusion):
            raise InvalidInstance('Pre-medication and infusion vectors differ in length')
        if any(s < 0 for s in self.premed):
            raise InvalidInstance('Pre-medication durations must be non-negative')
        if any(t < 1 for t in self.infusion):
            raise InvalidInstance('Infusion durations must be at least one minute')
        if not 0 < self.probability <= 1:
            raise InvalidInstance(f'Scenario probability {self.probability} is outside (0, 1]')

    def __len__(self):
        return len(self.premed)

    def duration(self, i):
        return self.premed[i] + self.infusion[i]

    @property
    def durations(self):
        return tuple(s + t for s, t in zip(self.premed, self.infusion))

    def total(self):
        return sum(self.premed) + sum(self.infusion)


@dataclass(frozen=True)
class Instance:
    patients: tuple
    scenarios: tuple
    num_nurses: int
    num_chairs: int
    shift_length: int = DEFAULT_SHIFT_LENGTH
    overtime_limit: int = DEFAULT_OVERTIME_LIMIT
    big_m: Optional[int] = None
    label: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'patients', tuple(self.patients))
        object.__setattr__(self, 'scenarios', tuple(self.scenarios))

        ids = [p.id for p in self.patients]
        if sorted(ids) != list(range(len(ids))):
            raise InvalidInstance('Patient ids must be unique and contiguous from 0')
        if ids != sorted(ids):
            object.__setattr__(
                self, 'patients', tuple(sorted(self.patients, key=lambda p: p.id))
            )
        if not self.scenarios:
            raise InvalidInstance('An instance needs at least one scenario')
        for index, scenario in enumerate(self.scenarios):
            if len(scenario) != len(self.patients):
                raise InvalidInstance(
                    f'Scenario {index} has {len(scenario)} durations for '
                    f'{len(self.patients)} patients'
                )
        total = math.fsum(s.probability for s in self.scenarios)
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            raise InvalidInstance(f'Scenario probabilities sum to {total}, not 1')
        if self.num_nurses < 1 or self.num_chairs < 1:
            raise InvalidInstance('At least one nurse and one chair are required')
        if self.shift_length <= 0:
            raise InvalidInstance('Shift length must be positive')
        if self.overtime_limit < 0:
            raise InvalidInstance('Overtime limit must be non-negative')

        floor = (
            self.shift_length
            + self.overtime_limit
            + max(scenario.total() for scenario in self.scenarios)
        )
        if self.big_m is None:
            longest = [
                max(scenario.duration(i) for scenario in self.scenarios)
                for i in range(len(self.patients))
            ]
            object.__setattr__(
                self, 'big_m', self.shift_length + self.overtime_limit + sum(longest)
            )
        elif self.big_m < floor:
            raise InvalidInstance(f'big_m {self.big_m} is below the safe floor {floor}')

        if self.num_nurses > self.num_chairs:
            logger.warning(
                'Instance %s has more nurses (%d) than chairs (%d)',
                self.label or '<unlabelled>',
                self.num_nurses,
                self.num_chairs,
            )

    def __str__(self):
        return self.label or f'{self.num_patients}-patient instance'

    @property
    def num_patients(self):
        return len(self.patients)

    @property
    def num_scenarios(self):
        return len(self.scenarios)

    @property
    def probabilities(self):
        return tuple(s.probability for s in self.scenarios)

    @property
    def horizon(self):
        """Latest admissible appointment time, H + L."""
        return self.shift_length + self.overtime_limit

    def class_ids(self):
        return tuple(p.class_id for p in self.patients)

    def duration_matrix(self):
        """Scenario-by-patient array of total treatment minutes."""
        return np.array([s.durations for s in self.scenarios], dtype=float)

    def mean_scenario(self):
        """Single scenario holding each patient's expected durations, rounded."""
        weights = np.array(self.probabilities)
        premed = weights @ np.array([s.premed for s in self.scenarios], dtype=float)
        infusion = weights @ np.array([s.infusion for s in self.scenarios], dtype=float)
        return Scenario(
            premed=tuple(int(math.floor(v + 0.5)) for v in premed),
            infusion=tuple(max(1, int(math.floor(v + 0.5))) for v in infusion),
            probability=1.0,
        )

    def with_resources(self, num_nurses, num_chairs):
        return replace(self, num_nurses=num_nurses, num_chairs=num_chairs, big_m=None)

    def with_scenarios(self, scenarios, label=None):
        return replace(
            self,
            scenarios=tuple(scenarios),
            big_m=None,
            label=self.label if label is None else label,
        )


@dataclass(frozen=True)
class ObjectiveWeights:
    lambda_wait: float = 0.3
    lambda_overtime: float = 0.3
    lambda_idle: float = 0.4
    normalized: bool = False

    def __post_init__(self):
        values = self.as_tuple()
        if any(v < 0 for v in values):
            raise ValueError('Objective weights must be non-negative')
        if not any(v > 0 for v in values):
            raise ValueError('At least one objective weight must be positive')

    def __str__(self):
        return '({:g}, {:g}, {:g})'.format(*self.as_tuple())

    @classmethod
    def from_sequence(cls, values, normalize=False):
        weights = cls(*(float(v) for v in values))
        return weights.normalize() if normalize else weights

    def as_tuple(self):
        return (self.lambda_wait, self.lambda_overtime, self.lambda_idle)

    def normalize(self):
        total = sum(self.as_tuple())
        return ObjectiveWeights(
            self.lambda_wait / total,
            self.lambda_overtime / total,
            self.lambda_idle / total,
            normalized=True,
        )


@dataclass(frozen=True)
class FirstStageSchedule:
    sequence: tuple
    appointment: tuple

    def __post_init__(self):
        object.__setattr__(self, 'sequence', tuple(self.sequence))
        object.__setattr__(self, 'appointment', tuple(self.appointment))

    @classmethod
    def from_appointments(cls, appointments):
        """Order patients by appointment time, ties broken by patient id."""
        appointments = tuple(appointments)
        sequence = sorted(range(len(appointments)), key=lambda i: (appointments[i], i))
        return cls(sequence=tuple(sequence), appointment=appointments)

    def position(self):
        return {patient: index for index, patient in enumerate(self.sequence)}

    def precedence_matrix(self):
        """b[i, j] = 1 iff patient i is earlier than j in the sequence."""
        n = len(self.sequence)
        rank = np.empty(n, dtype=int)
        rank[list(self.sequence)] = np.arange(n)
        return (rank[:, None] < rank[None, :]).astype(int)

    def ordered_appointments(self):
        return [self.appointment[i] for i in self.sequence]


@dataclass(frozen=True)
class SecondStageOutcome:
    start: tuple
    wait: tuple
    discharge: tuple
    nurse_of: tuple
    chair_of: tuple
    overtime: tuple
    idle: tuple
    objective: float = 0.0
    feasible: bool = True

    @property
    def terms(self):
        return (sum(self.wait), sum(self.overtime), sum(self.idle))


@dataclass(frozen=True)
class Decomposition:
    """Expected waiting (EWT), nurse overtime (EOT) and chair idle (EIT) minutes."""

    wait: float
    overtime: float
    idle: float
    objective: float

    def as_dict(self):
        return {
            'ewt': self.wait,
            'eot': self.overtime,
            'eit': self.idle,
            'objective': self.objective,
        }


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    patient: Optional[int] = field(default=None)

    def __str__(self):
        return f'{self.kind}: {self.message}'


def objective_value(outcome, weights):
    wait, overtime, idle = outcome.terms
    return (
        weights.lambda_wait * wait
        + weights.lambda_overtime * overtime
        + weights.lambda_idle * idle
    )


def _default_evaluator():
    from .evaluator import evaluate

    return evaluate


def expected_decomposition(
    schedule: FirstStageSchedule,
    inst: Instance,
    weights: ObjectiveWeights,
    evaluator: Optional[Callable] = None,
    cfg=None,
) -> Decomposition:
    evaluator = evaluator or _default_evaluator()
    wait = overtime = idle = 0.0
    for scenario in inst.scenarios:
        outcome = evaluator(schedule, scenario, inst, cfg)
        w, o, i = outcome.terms
        wait += scenario.probability * w
        overtime += scenario.probability * o
        idle += scenario.probability * i
    objective = (
        weights.lambda_wait * wait
        + weights.lambda_overtime * overtime
        + weights.lambda_idle * idle
    )
    return Decomposition(wait=wait, overtime=overtime, idle=idle, objective=objective)


def expected_objective(schedule, inst, weights, evaluator=None, cfg=None):
    """Probability-weighted second-stage objective over the scenario set.

    With ``cfg.strict_overtime`` the evaluator raises ``OvertimeLimitExceeded``
    on the first scenario breaking L.
    """
    evaluator = evaluator or _default_evaluator()
    return math.fsum(
        scenario.probability
        * objective_value(evaluator(schedule, scenario, inst, cfg), weights)
        for scenario in inst.scenarios
    )


def validate(schedule: FirstStageSchedule, inst: Instance) -> list:
    violations = []
    n = inst.num_patients

    if len(schedule.appointment) != n or len(schedule.sequence) != n:
        violations.append(
            Violation(
                'LengthViolation',
                f'expected {n} patients, got sequence of {len(schedule.sequence)} '
                f'and {len(schedule.appointment)} appointments',
            )
        )
        return violations
    if sorted(schedule.sequence) != list(range(n)):
        violations.append(
            Violation('PermutationViolation', 'sequence is not a permutation of patient ids')
        )
        return violations

    for patient, value in enumerate(schedule.appointment):
        if not float(value).is_integer():
            violations.append(
                Violation('IntegralityViolation', f'appointment {value} is not integer', patient)
            )
        if not 0 <= value <= inst.horizon:
            violations.append(
                Violation(
                    'RangeViolation',
                    f'appointment {value} outside [0, {inst.horizon}]',
                    patient,
                )
            )

    previous = None
    for patient in schedule.sequence:
        value = schedule.appointment[patient]
        if previous is not None and value < schedule.appointment[previous]:
            violations.append(
                Violation(
                    'PrecedenceViolation',
                    f'patient {patient} at {value} follows patient {previous} '
                    f'at {schedule.appointment[previous]}',
                    patient,
                )
            )
        previous = patient
    return violations


def equiprobable(count):
    """Probabilities for ``count`` equally likely scenarios summing exactly to 1."""
    base = 1.0 / count
    probabilities = [base] * count
    probabilities[-1] = 1.0 - base * (count - 1)
    return probabilities


def schedule_from_mapping(sequence: Sequence[int], appointment: Sequence[int]):
    """Schedule from plain lists; integral values become ints, others are kept for validate."""
    appointment = tuple(int(v) if float(v).is_integer() else float(v) for v in appointment)
    return FirstStageSchedule(sequence=tuple(int(i) for i in sequence), appointment=appointment)
