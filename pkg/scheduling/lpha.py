"""Linearized progressive hedging over the scenario set.

Each iteration solves every scenario subproblem, averages the appointment
times into a consensus, adapts the penalty parameter, updates the
multipliers and fixes patients that cycle or already agree.
"""
from __future__ import annotations

import logging
import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .core import FirstStageSchedule, expected_decomposition, expected_objective
from .exceptions import Infeasible, InfeasibleSchedule, NoConvergence
from .subproblem import MODES, PenaltyTerms, extend_cuts, repeated_points, solve_subproblem

logger = logging.getLogger(__name__)

ZERO_SUM_TOLERANCE = 1e-6
LOWER_BOUND_TOLERANCE = 1e-9


@dataclass(frozen=True)
class LphaConfig:
    alpha: float = 2.0
    rho0: float = 1e-4
    rho_u1: float = 0.1
    rho_u2: float = 1.0
    iterlimit: int = 100
    fix_start_iter: int = 50
    fix_fraction: float = 0.8
    cycle_window: int = 3
    cycle_threshold: float = 1e-4
    max_iterations: int = 500
    mode: str = 'local_search'
    workers: int = 1
    log_every: int = 10
    restarts: int = 3

    def __post_init__(self):
        if self.alpha <= 1:
            raise ValueError('alpha must be greater than 1')
        if self.rho0 <= 0:
            raise ValueError('rho0 must be positive')
        if not self.rho_u1 < self.rho_u2:
            raise ValueError('rho_u1 must be smaller than rho_u2')
        if not 0 < self.fix_fraction <= 1:
            raise ValueError('fix_fraction must lie in (0, 1]')
        if self.cycle_window < 2:
            raise ValueError('cycle_window must be at least 2')
        if self.max_iterations < 1 or self.workers < 1:
            raise ValueError('max_iterations and workers must be positive')
        if self.mode not in MODES:
            raise ValueError(f'mode must be one of {MODES}')

    def as_dict(self):
        return asdict(self)


@dataclass
class LphaState:
    probabilities: tuple
    hash_weights: tuple
    iteration: int = 0
    appointments: list = field(default_factory=list)
    sequences: list = field(default_factory=list)
    multipliers: list = field(default_factory=list)
    rho: float = 0.0
    consensus: tuple = ()
    previous_consensus: Optional[tuple] = None
    delta_p: list = field(default_factory=list)
    delta_d: list = field(default_factory=list)
    hash_history: list = field(default_factory=list)
    fixed: dict = field(default_factory=dict)
    cuts: list = field(default_factory=list)
    closed_cuts: list = field(default_factory=list)
    ot_idle_lb: list = field(default_factory=list)
    rho_trace: list = field(default_factory=list)
    fixed_trace: list = field(default_factory=list)
    fix_events: list = field(default_factory=list)
    lower_bound_violations: int = 0
    incumbent: Optional[FirstStageSchedule] = None
    incumbent_objective: float = math.inf

    @classmethod
    def initial(cls, inst, cfg, rng):
        probabilities = inst.probabilities
        n, num_scenarios = inst.num_patients, inst.num_scenarios
        return cls(
            probabilities=probabilities,
            hash_weights=draw_hash_weights(rng, probabilities),
            rho=cfg.rho0,
            multipliers=[[0.0] * n for _ in range(num_scenarios)],
            cuts=[((),) * n for _ in range(num_scenarios)],
            closed_cuts=[set() for _ in range(num_scenarios)],
        )

    @property
    def num_patients(self):
        return len(self.multipliers[0])

    def schedules(self):
        return [
            FirstStageSchedule(sequence, appointment)
            for sequence, appointment in zip(self.sequences, self.appointments)
        ]

    def penalty_terms(self, scenario_index):
        return PenaltyTerms(
            mu=self.multipliers[scenario_index],
            rho=self.rho,
            consensus=self.consensus,
            cuts=self.cuts[scenario_index],
        )

    def agreeing(self):
        """Patients whose integer appointment is identical in every scenario."""
        return {
            i
            for i in range(self.num_patients)
            if len({appointment[i] for appointment in self.appointments}) == 1
        }

    def converged(self):
        agreeing = self.agreeing()
        return all(i in agreeing or i in self.fixed for i in range(self.num_patients))


def draw_hash_weights(rng, probabilities):
    """Uniform(0, 1) scenario weights, redrawn wherever one equals its probability."""
    weights = rng.uniform(0.0, 1.0, size=len(probabilities))
    while any(z == p for z, p in zip(weights, probabilities)):
        weights = rng.uniform(0.0, 1.0, size=len(probabilities))
    return tuple(float(z) for z in weights)


def compute_consensus(appointments, probabilities):
    return tuple(
        float(value)
        for value in np.asarray(probabilities) @ np.asarray(appointments, dtype=float)
    )


def delta_primal(consensus, previous):
    return float(sum((a - b) ** 2 for a, b in zip(consensus, previous)))


def delta_dual(appointments, consensus):
    return float(
        sum((a - c) ** 2 for appointment in appointments for a, c in zip(appointment, consensus))
    )


def _increased(history):
    return len(history) >= 2 and None not in history[-2:] and history[-1] - history[-2] > 0


def update_penalty(state, cfg):
    """Next penalty parameter from the primal and dual movement."""
    cap = cfg.rho_u1 if state.iteration <= cfg.iterlimit else cfg.rho_u2
    rho = state.rho
    if _increased(state.delta_d) and rho < cap:
        return rho * cfg.alpha
    if _increased(state.delta_d):
        return cap
    if _increased(state.delta_p):
        return rho / cfg.alpha
    if rho <= cap:
        return rho
    return cap


def update_multipliers(state, rho):
    for scenario_index, appointment in enumerate(state.appointments):
        mu = state.multipliers[scenario_index]
        for i, (a, a_hat) in enumerate(zip(appointment, state.consensus)):
            mu[i] += rho * (a - a_hat)
    _check_zero_sum(state)


def _check_zero_sum(state):
    for i in range(state.num_patients):
        total = math.fsum(
            p * mu[i] for p, mu in zip(state.probabilities, state.multipliers)
        )
        if abs(total) > ZERO_SUM_TOLERANCE:
            raise AssertionError(
                f'Multipliers of patient {i} have probability-weighted sum {total}'
            )


def hash_values(state):
    return tuple(
        math.fsum(z * mu[i] for z, mu in zip(state.hash_weights, state.multipliers))
        for i in range(state.num_patients)
    )


def majority_value(values, probabilities):
    """Most frequent value by probability mass, smallest on ties."""
    mass = Counter()
    for value, p in zip(values, probabilities):
        mass[value] += p
    top = max(mass.values())
    return min(value for value, m in mass.items() if m >= top - 1e-12)


def detect_cycles_and_fix(state, cfg):
    """Fix cycling patients to their majority value and patients already in agreement.

    Works on the latest per-scenario solutions. Records the current hash
    vector and returns the set of patients fixed by this call.
    """
    hashes = hash_values(state)
    state.hash_history.append(hashes)
    newly_fixed = set()

    for i in range(state.num_patients):
        if i in state.fixed:
            continue
        values = [appointment[i] for appointment in state.appointments]
        mass = Counter()
        for value, p in zip(values, state.probabilities):
            mass[value] += p
        agreed, agreed_mass = min(mass.items(), key=lambda item: (-item[1], item[0]))
        if agreed_mass >= cfg.fix_fraction - 1e-12:
            state.fixed[i] = agreed
            newly_fixed.add(i)
            state.fix_events.append(
                {'iteration': state.iteration, 'patient': i, 'value': agreed, 'reason': 'agreement'}
            )
            continue

        history = state.hash_history
        if state.iteration <= cfg.fix_start_iter or len(history) < cfg.cycle_window:
            continue
        cycling = all(
            abs(history[-1][i] - history[-1 - k][i]) < cfg.cycle_threshold
            for k in range(1, cfg.cycle_window)
        )
        if cycling:
            value = majority_value(values, state.probabilities)
            state.fixed[i] = value
            newly_fixed.add(i)
            state.fix_events.append(
                {'iteration': state.iteration, 'patient': i, 'value': value, 'reason': 'cycle'}
            )
    if newly_fixed:
        logger.info(
            'Iteration %d: fixed patients %s', state.iteration, sorted(newly_fixed)
        )
    return newly_fixed


def consensus_schedule(consensus):
    """Rounded consensus appointments, ordered by consensus value then id."""
    order = sorted(range(len(consensus)), key=lambda i: (consensus[i], i))
    appointment = tuple(int(math.floor(value + 0.5)) for value in consensus)
    return FirstStageSchedule(sequence=tuple(order), appointment=appointment)


@dataclass
class RunReport:
    iterations: int
    converged: bool
    objective: float
    decomposition: dict
    wall_time: float
    schedule: dict
    weights: tuple
    rho_trace: list
    delta_p_trace: list
    delta_d_trace: list
    fixed_trace: list
    fix_events: list
    lower_bound_violations: int
    config: dict
    seed: Optional[int]
    version: str
    instance: str = ''

    def as_dict(self):
        return asdict(self)

    def trace_rows(self):
        return [
            {
                'iteration': v + 1,
                'rho': self.rho_trace[v],
                'delta_p': self.delta_p_trace[v],
                'delta_d': self.delta_d_trace[v],
                'fixed': self.fixed_trace[v],
            }
            for v in range(self.iterations)
        ]


def run_report(
    state, schedule, inst, w, cfg, seed=None, wall_time=0.0, converged=True, eval_cfg=None
):
    from . import __version__

    decomposition = expected_decomposition(schedule, inst, w, cfg=eval_cfg)
    return RunReport(
        iterations=state.iteration,
        converged=converged,
        objective=decomposition.objective,
        decomposition=decomposition.as_dict(),
        wall_time=wall_time,
        schedule={'sequence': list(schedule.sequence), 'appointment': list(schedule.appointment)},
        weights=w.as_tuple(),
        rho_trace=list(state.rho_trace),
        delta_p_trace=list(state.delta_p),
        delta_d_trace=list(state.delta_d),
        fixed_trace=list(state.fixed_trace),
        fix_events=list(state.fix_events),
        lower_bound_violations=state.lower_bound_violations,
        config=cfg.as_dict(),
        seed=seed,
        version=__version__,
        instance=inst.label,
    )


def update_cuts(state):
    """Add the latest appointments as operating points to each scenario's cut pools.

    A patient's pool closes once its operating point repeats the latest cut.
    """
    for index, points in enumerate(state.appointments):
        closed = state.closed_cuts[index]
        closed |= repeated_points(state.cuts[index], points)
        state.cuts[index] = extend_cuts(state.cuts[index], points, closed)


def _scored(schedule, inst, w, eval_cfg):
    """Expected objective, infinite when strict evaluation rejects the schedule."""
    try:
        return expected_objective(schedule, inst, w, cfg=eval_cfg)
    except InfeasibleSchedule:
        return math.inf


def _solve_scenario(job):
    (
        scenario_index, scenario, inst, w, terms, mode, warm_start, fixed, seed, restarts, eval_cfg
    ) = job
    rng = np.random.default_rng([seed, scenario_index])
    try:
        return solve_subproblem(
            scenario,
            inst,
            w,
            terms=terms,
            mode=mode,
            warm_start=warm_start,
            fixed=fixed,
            rng=rng,
            cfg=eval_cfg,
            restarts=restarts,
        )
    except Infeasible:
        return None


def _solve_all(state, inst, w, cfg, seed, eval_cfg, pool):
    first = state.iteration == 1
    schedules = None if first else state.schedules()
    jobs = [
        (
            index,
            scenario,
            inst,
            w,
            PenaltyTerms.none(inst.num_patients) if first else state.penalty_terms(index),
            cfg.mode,
            None if first else schedules[index],
            dict(state.fixed),
            seed or 0,
            cfg.restarts,
            eval_cfg,
        )
        for index, scenario in enumerate(inst.scenarios)
    ]
    mapper = pool.map if pool is not None else map
    return list(mapper(_solve_scenario, jobs))


def _absorb(state, solutions, w):
    """Store this iteration's scenario solutions in the state."""
    failed = [index for index, solution in enumerate(solutions) if solution is None]
    if state.iteration == 1:
        if failed:
            raise Infeasible(
                f'{len(failed)} of {len(solutions)} scenario subproblems violate the overtime limit'
            )
        state.ot_idle_lb = [solution.ot_idle_lb for solution in solutions]
        state.appointments = [tuple(s.schedule.appointment) for s in solutions]
        state.sequences = [tuple(s.schedule.sequence) for s in solutions]
        return

    if len(failed) == len(solutions):
        raise Infeasible('Every scenario subproblem violates the overtime limit')
    for index, solution in enumerate(solutions):
        if solution is None:
            logger.warning(
                'Iteration %d: scenario %d infeasible, keeping its previous solution',
                state.iteration,
                index,
            )
            continue
        if solution.ot_idle_lb < state.ot_idle_lb[index] - LOWER_BOUND_TOLERANCE:
            state.lower_bound_violations += 1
            logger.warning(
                'Iteration %d: scenario %d overtime+idle %.4f is below its first-iteration '
                'bound %.4f',
                state.iteration,
                index,
                solution.ot_idle_lb,
                state.ot_idle_lb[index],
            )
        state.appointments[index] = tuple(solution.schedule.appointment)
        state.sequences[index] = tuple(solution.schedule.sequence)


def run_lpha(inst, w, cfg: Optional[LphaConfig] = None, seed: Optional[int] = None, eval_cfg=None):
    """Solve ``inst`` with linearized progressive hedging.

    Returns the rounded consensus schedule and its ``RunReport``. Raises
    ``NoConvergence`` carrying the best incumbent seen when
    ``cfg.max_iterations`` runs out.
    """
    cfg = cfg or LphaConfig()
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    state = LphaState.initial(inst, cfg, rng)
    logger.info(
        'LPHA on %s: %d patients, %d scenarios, weights %s',
        inst,
        inst.num_patients,
        inst.num_scenarios,
        w,
    )

    pool = ProcessPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None
    try:
        converged = False
        while state.iteration < cfg.max_iterations:
            state.iteration += 1
            if state.iteration > 1:
                update_cuts(state)
            solutions = _solve_all(state, inst, w, cfg, seed, eval_cfg, pool)
            _absorb(state, solutions, w)

            state.previous_consensus = state.consensus or None
            state.consensus = compute_consensus(state.appointments, state.probabilities)
            state.delta_d.append(delta_dual(state.appointments, state.consensus))
            state.delta_p.append(
                None
                if state.previous_consensus is None
                else delta_primal(state.consensus, state.previous_consensus)
            )
            state.rho_trace.append(state.rho)

            rho = state.rho
            if state.iteration > 1:
                state.rho = update_penalty(state, cfg)
            update_multipliers(state, rho)

            candidate = consensus_schedule(state.consensus)
            value = _scored(candidate, inst, w, eval_cfg)
            if value < state.incumbent_objective:
                state.incumbent, state.incumbent_objective = candidate, value

            if state.converged():
                state.fixed_trace.append(len(state.fixed))
                converged = True
                break
            if state.iteration > 1:
                detect_cycles_and_fix(state, cfg)
            state.fixed_trace.append(len(state.fixed))

            if state.iteration % cfg.log_every == 0:
                logger.info(
                    'Iteration %d: rho=%.6g delta_d=%.4f fixed=%d incumbent=%.4f',
                    state.iteration,
                    state.rho,
                    state.delta_d[-1],
                    len(state.fixed),
                    state.incumbent_objective,
                )
    finally:
        if pool is not None:
            pool.shutdown()

    wall_time = time.perf_counter() - started
    if state.incumbent is None:
        raise Infeasible('No consensus schedule respects the nurse overtime limit')
    if not converged:
        report = run_report(state, state.incumbent, inst, w, cfg, seed, wall_time, False, eval_cfg)
        logger.warning(
            'LPHA stopped after %d iterations without consensus; incumbent %.4f',
            state.iteration,
            state.incumbent_objective,
        )
        raise NoConvergence(state.iteration, schedule=state.incumbent, report=report)

    schedule = consensus_schedule(state.consensus)
    if math.isinf(_scored(schedule, inst, w, eval_cfg)):
        logger.warning(
            'Consensus schedule breaks the overtime limit; returning the incumbent %.4f',
            state.incumbent_objective,
        )
        schedule = state.incumbent
    report = run_report(state, schedule, inst, w, cfg, seed, wall_time, eval_cfg=eval_cfg)
    logger.info(
        'LPHA converged after %d iterations: objective %.4f in %.1fs',
        state.iteration,
        report.objective,
        wall_time,
    )
    return schedule, report
