"""Reproducible instances from the four-class duration model, plus fit statistics."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.stats import chi2

from .core import FirstStageSchedule, Instance, Patient, Scenario, equiprobable
from .evaluator import earliest_starts, evaluate
from .exceptions import GenerationExhausted, TooFewSamples, ZeroActual
from .heuristics import SequencingRule, sequence_patients

logger = logging.getLogger(__name__)

MAX_RETRIES = 1000
OVERTIME_TOLERANCE = 30
MIN_EXPECTED_COUNT = 5
SIGNIFICANCE = 0.05


@dataclass(frozen=True)
class PatientClass:
    probability: float
    premed: tuple
    infusion: tuple

    def __post_init__(self):
        for name in ('premed', 'infusion'):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f'{name} interval [{lo}, {hi}] is empty')


@dataclass(frozen=True)
class ClassModel:
    classes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        total = math.fsum(c.probability for c in self.classes)
        if not self.classes or total <= 0:
            raise ValueError('A class model needs classes with positive probability')
        if abs(total - 1.0) > 1e-9:
            object.__setattr__(
                self,
                'classes',
                tuple(
                    PatientClass(c.probability / total, c.premed, c.infusion)
                    for c in self.classes
                ),
            )

    def __len__(self):
        return len(self.classes)

    def cumulative(self):
        return tuple(float(v) for v in np.cumsum([c.probability for c in self.classes]))

    def get(self, class_id):
        return self.classes[class_id - 1]


TABLE_CLASS_MODEL = ClassModel(
    classes=(
        PatientClass(0.2696, (0, 14), (16, 44)),
        PatientClass(0.0785, (6, 35), (29, 80)),
        PatientClass(0.3333, (8, 26), (74, 132)),
        PatientClass(0.3186, (6, 27), (125, 217)),
    )
)

# Patients per class (1-4) in each of the ten 8-patient fixtures.
FIXTURE_COMPOSITIONS = (
    (2, 1, 1, 4),
    (1, 3, 0, 4),
    (1, 2, 1, 4),
    (2, 1, 2, 3),
    (1, 2, 1, 4),
    (1, 1, 3, 3),
    (1, 2, 2, 3),
    (1, 1, 3, 3),
    (1, 2, 1, 4),
    (2, 1, 1, 4),
)


@dataclass(frozen=True)
class GenSpec:
    num_patients: int = 8
    num_scenarios: int = 50
    num_nurses: int = 2
    num_chairs: int = 4
    shift_length: int = 240
    overtime_limit: int = 180
    seed: Optional[int] = None
    target_overtime: Optional[float] = None

    def __post_init__(self):
        for name in ('num_patients', 'num_scenarios', 'num_nurses', 'num_chairs', 'shift_length'):
            if getattr(self, name) < 1:
                raise ValueError(f'{name} must be positive')
        if self.overtime_limit < 0:
            raise ValueError('overtime_limit must be non-negative')


def draw_class(u, model=TABLE_CLASS_MODEL):
    """Class id (1-based) whose cumulative probability band contains ``u``."""
    cumulative = model.cumulative()
    index = int(np.searchsorted(cumulative, u, side='right'))
    return min(index, len(cumulative) - 1) + 1


def _draw_scenarios(rng, model, class_ids, num_scenarios):
    premed_lo = np.array([model.get(c).premed[0] for c in class_ids])
    premed_hi = np.array([model.get(c).premed[1] for c in class_ids])
    infusion_lo = np.array([model.get(c).infusion[0] for c in class_ids])
    infusion_hi = np.array([model.get(c).infusion[1] for c in class_ids])
    shape = (num_scenarios, len(class_ids))
    premed = rng.integers(premed_lo, premed_hi + 1, size=shape)
    infusion = rng.integers(infusion_lo, infusion_hi + 1, size=shape)
    probabilities = equiprobable(num_scenarios)
    return [
        Scenario(tuple(premed[w].tolist()), tuple(infusion[w].tolist()), probabilities[w])
        for w in range(num_scenarios)
    ]


def expected_nurse_overtime(inst):
    """Mean per-nurse overtime of the LPT mean-value zero-wait schedule over the scenarios."""
    sequence = sequence_patients(inst, SequencingRule.LPT, exclude_zero_mean=True)
    mean = inst.mean_scenario()
    schedule = FirstStageSchedule(
        sequence, earliest_starts(sequence, mean.premed, mean.infusion, inst)
    )
    total = math.fsum(
        scenario.probability * sum(evaluate(schedule, scenario, inst).overtime)
        for scenario in inst.scenarios
    )
    return total / inst.num_nurses


def generate_instance(model=TABLE_CLASS_MODEL, spec=None, class_ids=None, index=1):
    """Instance labelled ``<index>_<patients>_<scenarios>`` drawn from ``spec.seed``.

    With ``spec.target_overtime`` the draw is repeated until the expected
    per-nurse overtime lands within 30 minutes of the target.
    """
    spec = spec or GenSpec()
    rng = np.random.default_rng(spec.seed)
    label = f'{index}_{spec.num_patients}_{spec.num_scenarios}'
    if class_ids is not None and len(class_ids) != spec.num_patients:
        raise ValueError(f'Expected {spec.num_patients} class ids, got {len(class_ids)}')

    for attempt in range(MAX_RETRIES):
        if class_ids is None:
            classes = [draw_class(u, model) for u in rng.random(spec.num_patients)]
        else:
            classes = list(class_ids)
        inst = Instance(
            patients=tuple(Patient(i, c) for i, c in enumerate(classes)),
            scenarios=_draw_scenarios(rng, model, classes, spec.num_scenarios),
            num_nurses=spec.num_nurses,
            num_chairs=spec.num_chairs,
            shift_length=spec.shift_length,
            overtime_limit=spec.overtime_limit,
            label=label,
        )
        if spec.target_overtime is None:
            return inst
        overtime = expected_nurse_overtime(inst)
        if abs(overtime - spec.target_overtime) <= OVERTIME_TOLERANCE:
            logger.debug(
                'Instance %s hit overtime %.1f after %d draws', label, overtime, attempt + 1
            )
            return inst
    raise GenerationExhausted(
        f'No draw within {OVERTIME_TOLERANCE} minutes of {spec.target_overtime} '
        f'overtime after {MAX_RETRIES} attempts'
    )


class ChiSquareResult(NamedTuple):
    statistic: float
    p_value: float
    reject_at_95: bool
    bins: int


def _merge_bins(groups, expected_per_value):
    merged, current = [], []
    for group in groups:
        current.extend(group)
        if len(current) * expected_per_value >= MIN_EXPECTED_COUNT:
            merged.append(current)
            current = []
    if current:
        if merged:
            merged[-1].extend(current)
        else:
            merged.append(current)
    return merged


def chi_square_uniform_fit(samples, lo, hi, bins=None):
    """Pearson test of integer ``samples`` against the discrete uniform on [lo, hi].

    Values are grouped into ``bins`` contiguous bins (one per value by
    default); adjacent bins merge until each expects at least five samples.
    """
    samples = np.asarray(samples, dtype=int)
    if samples.size == 0:
        raise TooFewSamples('No samples to test')
    if samples.min() < lo or samples.max() > hi:
        raise ValueError(f'Samples fall outside [{lo}, {hi}]')
    values = np.arange(lo, hi + 1)
    groups = [list(chunk) for chunk in np.array_split(values, bins or len(values)) if len(chunk)]
    groups = _merge_bins(groups, samples.size / len(values))
    if len(groups) < 2:
        raise TooFewSamples(
            f'{samples.size} samples leave fewer than two bins with {MIN_EXPECTED_COUNT} expected'
        )

    counts = np.bincount(samples - lo, minlength=len(values))
    observed = np.array([counts[np.asarray(g) - lo].sum() for g in groups], dtype=float)
    expected = np.array([len(g) * samples.size / len(values) for g in groups])
    statistic = float(((observed - expected) ** 2 / expected).sum())
    p_value = float(chi2.sf(statistic, len(groups) - 1))
    return ChiSquareResult(statistic, p_value, p_value < SIGNIFICANCE, len(groups))


def compute_mape(actual, predicted):
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if actual.shape != predicted.shape:
        raise ValueError('actual and predicted differ in length')
    if actual.size == 0:
        raise TooFewSamples('No durations to compare')
    if np.any(actual <= 0):
        raise ZeroActual('Actual durations must be positive')
    return float(np.mean(np.abs(actual - predicted) / actual) * 100)


def fixture_class_ids(composition):
    return [class_id for class_id, count in enumerate(composition, start=1) for _ in range(count)]


def fixture_instances(num_scenarios=50, model=TABLE_CLASS_MODEL):
    """The ten 8-patient benchmark instances with seeds 1..10."""
    return [
        generate_instance(
            model,
            GenSpec(num_patients=8, num_scenarios=num_scenarios, seed=index),
            class_ids=fixture_class_ids(composition),
            index=index,
        )
        for index, composition in enumerate(FIXTURE_COMPOSITIONS, start=1)
    ]
