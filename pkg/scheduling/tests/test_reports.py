import json
from collections import defaultdict

import pandas as pd

from scheduling.core import FirstStageSchedule, ObjectiveWeights
from scheduling.evaluator import evaluate
from scheduling.lpha import run_lpha
from scheduling.reports import (
    gantt_bars,
    outcome_frame,
    write_gantt_svg,
    write_outcome_csv,
    write_report,
    write_trace_csv,
)


def overlapping(bars):
    bars = sorted(bars, key=lambda bar: bar['start'])
    return any(b['start'] < a['end'] for a, b in zip(bars, bars[1:]))


def test_outcome_frame(two_patients):
    schedule = FirstStageSchedule((0, 1), (0, 0))
    outcome = evaluate(schedule, two_patients.scenarios[0], two_patients)
    frame = outcome_frame(schedule, outcome)
    assert len(frame) == 3
    assert list(frame['id']) == [0, 1, 'summary']
    summary = frame.iloc[-1]
    assert summary['wait'] == 10
    assert summary['idle'] == 415
    assert list(frame['chair'][:2]) == [1, 2]


def test_outcome_csv(two_patients, tmp_path):
    schedule = FirstStageSchedule((0, 1), (0, 0))
    outcome = evaluate(schedule, two_patients.scenarios[0], two_patients)
    path = write_outcome_csv(schedule, outcome, tmp_path / 'tables' / 'outcome.csv')
    assert len(pd.read_csv(path)) == 3


def test_gantt_rows_never_overlap(small_instance):
    schedule = FirstStageSchedule((0, 1, 2, 3), (0, 0, 0, 0))
    for scenario in small_instance.scenarios:
        outcome = evaluate(schedule, scenario, small_instance)
        rows = defaultdict(list)
        for bar in gantt_bars(outcome, scenario, small_instance):
            if bar['kind'] != 'proctor':
                rows[bar['row']].append(bar)
        assert not any(overlapping(bars) for bars in rows.values())


def test_gantt_svg(two_patients, tmp_path):
    schedule = FirstStageSchedule((0, 1), (0, 10))
    scenario = two_patients.scenarios[0]
    outcome = evaluate(schedule, scenario, two_patients)
    path = write_gantt_svg(outcome, scenario, two_patients, tmp_path / 'gantt.svg', title='Pair')
    assert '<svg' in path.read_text()


def test_report_and_trace(two_patients, tmp_path):
    _, report = run_lpha(two_patients, ObjectiveWeights(0.3, 0.3, 0.4), seed=0)
    data = json.loads(write_report(report, tmp_path / 'report.json').read_text())
    assert data['converged'] is True
    assert data['instance'] == 'pair'
    trace = pd.read_csv(write_trace_csv(report, tmp_path / 'trace.csv'))
    assert list(trace.columns) == ['iteration', 'rho', 'delta_p', 'delta_d', 'fixed']
    assert len(trace) == 1
