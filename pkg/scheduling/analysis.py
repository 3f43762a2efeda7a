"""Benchmark workflows behind the management commands.

Every function returns plain row dicts so commands can hand them to pandas.
"""
from __future__ import annotations

import itertools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Optional

import pandas as pd

from .core import ObjectiveWeights, expected_decomposition, expected_objective
from .exceptions import InstanceTooLarge, NoConvergence
from .heuristics import (
    HedgingConfig,
    SequencingRule,
    baseline_slot_schedule,
    fixed_sequence_opt,
    job_hedging_schedule,
)
from .lpha import LphaConfig, run_lpha
from .subproblem import solve_subproblem

logger = logging.getLogger(__name__)

LAMBDA_PRESETS = tuple(
    ObjectiveWeights.from_sequence(values, normalize=True)
    for values in (
        (1, 10, 10),
        (1, 2, 2),
        (1, 0.5, 0.5),
        (1, 0.1, 0.1),
        (1, 0.1, 1),
        (1, 0.5, 1),
        (1, 2, 1),
        (1, 10, 1),
        (1, 1, 0.1),
        (1, 1, 0.5),
        (1, 1, 2),
        (1, 1, 10),
    )
)
VSS_WEIGHTS = tuple(
    ObjectiveWeights(*values)
    for values in (
        (0.3, 0.3, 0.4),
        (0.2, 0.6, 0.2),
        (0.8, 0.1, 0.1),
        (0.1, 0.8, 0.1),
        (0.1, 0.1, 0.8),
    )
)
HEURISTIC_WEIGHTS = ObjectiveWeights(0.1, 0.8, 0.1)
HEDGING_LEVELS = (0.40, 0.45, 0.50, 0.55, 0.60, 0.65)
RESOURCE_GRID = tuple(
    (nurses, chairs)
    for nurses in (1, 2, 3)
    for chairs in (4, 5, 6)
    if (nurses, chairs) != (3, 4)
)
PARAMETER_GRID = {
    'alpha': (2.0, 4.0, 6.0),
    'rho0': (0.0001, 0.005, 0.1),
    'rho_u1': (0.1, 0.5, 0.7),
    'iterlimit': (50, 100, 150),
}
EXACT_SEQUENCE_LIMIT = 8


@dataclass(frozen=True)
class SweepSpec:
    lambda_grid: tuple = LAMBDA_PRESETS
    resource_grid: tuple = RESOURCE_GRID
    parameter_grid: dict = field(default_factory=lambda: dict(PARAMETER_GRID))
    repetitions: int = 1

    def __post_init__(self):
        if not self.lambda_grid and not self.resource_grid and not self.parameter_grid:
            raise ValueError('A sweep needs at least one non-empty grid')
        if any(not values for values in self.parameter_grid.values()):
            raise ValueError('Parameter grids must not be empty')
        if self.repetitions < 1:
            raise ValueError('repetitions must be positive')


@dataclass(frozen=True)
class VssResult:
    mv_objective: float
    lpha_objective: float
    relative_vss: float

    def as_dict(self):
        return {
            'mv_objective': self.mv_objective,
            'lpha_objective': self.lpha_objective,
            'relative_vss': self.relative_vss,
        }


def relative_gap(value, reference):
    """Percent gap of ``value`` over ``reference``."""
    if reference == 0:
        return 0.0 if value == 0 else math.inf
    return (value - reference) / reference * 100


def run_many(func, items, workers=1):
    """Map ``func`` over ``items`` in order, across processes when workers > 1."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def solve_lpha(inst, w, cfg=None, seed=None):
    """LPHA schedule and report; the incumbent stands in on non-convergence."""
    try:
        return run_lpha(inst, w, cfg, seed)
    except NoConvergence as exc:
        logger.warning('%s: using the LPHA incumbent after %d iterations', inst, exc.iterations)
        return exc.schedule, exc.report


def mean_value_schedule(inst, w, mode='local_search'):
    """Deterministic optimum for the scenario of rounded per-patient mean durations."""
    return solve_subproblem(inst.mean_scenario(), inst, w, mode=mode).schedule


def vss(inst, w, cfg=None, seed=None, lpha_schedule=None):
    if lpha_schedule is None:
        lpha_schedule, _ = solve_lpha(inst, w, cfg, seed)
    mode = cfg.mode if cfg is not None else 'local_search'
    mv = expected_objective(mean_value_schedule(inst, w, mode), inst, w)
    lpha = expected_objective(lpha_schedule, inst, w)
    return VssResult(mv, lpha, relative_gap(mv, lpha))


def vss_rows(inst, weights=VSS_WEIGHTS, cfg=None, seed=None):
    rows = []
    for w in weights:
        result = vss(inst, w, cfg, seed)
        rows.append({'instance': inst.label, 'weights': str(w), **result.as_dict()})
    return rows


def compare(
    inst,
    w=HEURISTIC_WEIGHTS,
    rules=tuple(SequencingRule),
    levels=HEDGING_LEVELS,
    opt=True,
    baseline=True,
    exact=False,
    cfg=None,
    seed=None,
    budget=None,
):
    """Gap rows of every heuristic against the LPHA schedule of one instance."""
    lpha_schedule, report = solve_lpha(inst, w, cfg, seed)
    reference = expected_objective(lpha_schedule, inst, w)
    rows = [_row(inst, 'LPHA', 'lpha', None, reference, reference)]

    for rule in rules:
        rule = SequencingRule.parse(rule)
        hedged = []
        for k in levels:
            schedule = job_hedging_schedule(inst, rule, HedgingConfig(k))
            hedged.append(schedule)
            value = expected_objective(schedule, inst, w)
            rows.append(_row(inst, str(rule), 'hedging', k, value, reference))
        if opt:
            sequence = hedged[0].sequence if hedged else job_hedging_schedule(inst, rule).sequence
            schedule = fixed_sequence_opt(
                inst, w, sequence, budget=budget, starts=[s.appointment for s in hedged]
            )
            value = expected_objective(schedule, inst, w)
            rows.append(_row(inst, f'{rule}-opt', 'opt', None, value, reference))

    if baseline:
        value = expected_objective(baseline_slot_schedule(inst), inst, w)
        rows.append(_row(inst, 'Baseline', 'baseline', None, value, reference))
    if exact:
        _, value, _ = optimality_gap(inst, w, lpha_schedule, budget=budget)
        rows.append(_row(inst, 'Exact', 'exact', None, value, reference))
    return rows


def _row(inst, method, variant, k, objective, reference):
    return {
        'instance': inst.label,
        'method': method,
        'variant': variant,
        'k': k,
        'objective': objective,
        'gap': relative_gap(objective, reference),
    }


def gap_table(rows):
    """Mean objective and percent gap per method and hedging level over instances."""
    frame = pd.DataFrame(rows)
    frame['k'] = frame['k'].fillna('')
    return (
        frame.groupby(['method', 'variant', 'k'], sort=False)[['objective', 'gap']]
        .mean()
        .reset_index()
    )


def optimality_gap(inst, w, schedule, budget=None):
    """Best schedule over every sequence with fixed-sequence timing, and the gap of ``schedule``.

    ``schedule`` itself is a candidate, so the gap is never negative.
    """
    if inst.num_patients > EXACT_SEQUENCE_LIMIT:
        raise InstanceTooLarge(
            f'Sequence enumeration supports at most {EXACT_SEQUENCE_LIMIT} patients'
        )
    value = expected_objective(schedule, inst, w)
    best, best_value = schedule, value
    for sequence in itertools.permutations(range(inst.num_patients)):
        candidate = fixed_sequence_opt(inst, w, sequence, budget=budget)
        candidate_value = expected_objective(candidate, inst, w)
        if candidate_value < best_value:
            best, best_value = candidate, candidate_value
    return best, best_value, relative_gap(value, best_value)


def _measure(inst, w, cfg, seed, **extra):
    started = time.perf_counter()
    schedule, report = solve_lpha(inst, w, cfg, seed)
    decomposition = expected_decomposition(schedule, inst, w)
    return {
        'instance': inst.label,
        **extra,
        'objective': decomposition.objective,
        'cpu': time.perf_counter() - started,
        'iterations': report.iterations,
        'ewt': decomposition.wait,
        'eot': decomposition.overtime,
        'eit': decomposition.idle,
    }


def lambda_sweep(inst, grid=LAMBDA_PRESETS, cfg=None, seed=None):
    return [_measure(inst, w, cfg, seed, weights=str(w)) for w in grid]


def resource_sweep(inst, w, grid=RESOURCE_GRID, cfg=None, seed=None):
    return [
        _measure(inst.with_resources(nurses, chairs), w, cfg, seed, nurses=nurses, chairs=chairs)
        for nurses, chairs in grid
    ]


def parameter_sweep(inst, w, grid=None, cfg=None, seed=None):
    """One-way sweeps: each LPHA parameter varies alone around ``cfg``."""
    cfg = cfg or LphaConfig()
    rows = []
    for name, values in (grid or PARAMETER_GRID).items():
        for value in values:
            changes = {name: value}
            if name == 'rho_u1' and value >= cfg.rho_u2:
                changes['rho_u2'] = value * 10
            rows.append(
                _measure(inst, w, replace(cfg, **changes), seed, parameter=name, value=value)
            )
    return rows


def sweep(inst, spec: Optional[SweepSpec] = None, w=None, cfg=None, seed=None, kind='lambda'):
    """Rows of one sweep kind, repeated with consecutive seeds from ``seed``."""
    spec = spec or SweepSpec()
    w = w or ObjectiveWeights()
    rows = []
    for repetition in range(spec.repetitions):
        rows.extend(_sweep_once(inst, spec, w, cfg, (seed or 0) + repetition, kind))
    return rows


def _sweep_once(inst, spec, w, cfg, seed, kind):
    if kind == 'lambda':
        if not spec.lambda_grid:
            raise ValueError('The lambda grid is empty')
        return lambda_sweep(inst, spec.lambda_grid, cfg, seed)
    if kind == 'resources':
        if not spec.resource_grid:
            raise ValueError('The resource grid is empty')
        return resource_sweep(inst, w, spec.resource_grid, cfg, seed)
    if kind == 'parameters':
        if not spec.parameter_grid:
            raise ValueError('The parameter grid is empty')
        return parameter_sweep(inst, w, spec.parameter_grid, cfg, seed)
    raise ValueError(f'Unknown sweep kind {kind!r}')


def sweep_table(rows, by):
    """Mean objective, CPU and EWT/EOT/EIT per grid cell over instances."""
    frame = pd.DataFrame(rows)
    columns = [c for c in ('objective', 'cpu', 'ewt', 'eot', 'eit') if c in frame]
    return frame.groupby(list(by), sort=False)[columns].mean().reset_index()


def instance_job(func, **kwargs):
    """Picklable per-instance callable for ``run_many``."""
    return partial(func, **kwargs)
