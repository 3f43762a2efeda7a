"""CSV tables (pandas), SVG Gantt charts (matplotlib) and JSON run reports."""
from pathlib import Path

import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from .serializers import write_json  # noqa: E402

OUTCOME_COLUMNS = ['id', 'a', 'wait', 'start', 'discharge', 'nurse', 'chair', 'overtime', 'idle']
GRID_MINUTES = 60
PROCTOR_COLOR = '#BFBFBF'


def _ensure_parent(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def outcome_frame(schedule, outcome):
    """One row per patient in sequence order, then a summary row of totals."""
    rows = [
        {
            'id': patient,
            'a': schedule.appointment[patient],
            'wait': outcome.wait[patient],
            'start': outcome.start[patient],
            'discharge': outcome.discharge[patient],
            'nurse': outcome.nurse_of[patient] + 1,
            'chair': outcome.chair_of[patient] + 1,
            'overtime': None,
            'idle': None,
        }
        for patient in schedule.sequence
    ]
    rows.append(
        {
            'id': 'summary',
            'a': None,
            'wait': sum(outcome.wait),
            'start': None,
            'discharge': max(outcome.discharge, default=0),
            'nurse': None,
            'chair': None,
            'overtime': sum(outcome.overtime),
            'idle': sum(outcome.idle),
        }
    )
    return pd.DataFrame(rows, columns=OUTCOME_COLUMNS)


def write_table(frame, path):
    if not isinstance(frame, pd.DataFrame):
        frame = pd.DataFrame(frame)
    path = _ensure_parent(path)
    frame.to_csv(path, index=False)
    return path


def write_outcome_csv(schedule, outcome, path):
    return write_table(outcome_frame(schedule, outcome), path)


def write_report(report, path):
    return write_json(report.as_dict(), path)


def write_trace_csv(report, path):
    return write_table(pd.DataFrame(report.trace_rows()), path)


def write_subproblem_trace(trace, path):
    return write_table(pd.DataFrame(trace, columns=['sequence', 'cost']), path)


def _bar(row, kind, patient, start, end):
    return {'row': row, 'kind': kind, 'patient': patient, 'start': start, 'end': end}


def gantt_bars(outcome, scenario, inst):
    """Bars per row: chair rows hold whole treatments, nurse rows pre-medication and proctoring."""
    bars = []
    for patient, start in enumerate(outcome.start):
        premed_end = start + scenario.premed[patient]
        discharge = outcome.discharge[patient]
        chair = f'Chair {outcome.chair_of[patient] + 1}'
        nurse = f'Nurse {outcome.nurse_of[patient] + 1}'
        bars.append(_bar(chair, 'treatment', patient, start, discharge))
        if premed_end > start:
            bars.append(_bar(nurse, 'premed', patient, start, premed_end))
        bars.append(_bar(nurse, 'proctor', patient, premed_end, discharge))
    return bars


def write_gantt_svg(outcome, scenario, inst, path, title=None):
    bars = gantt_bars(outcome, scenario, inst)
    rows = [f'Chair {c + 1}' for c in range(inst.num_chairs)]
    rows += [f'Nurse {n + 1}' for n in range(inst.num_nurses)]
    index = {row: k for k, row in enumerate(reversed(rows))}
    colors = plt.get_cmap('tab10')
    horizon = max([inst.shift_length, *outcome.discharge])

    fig, ax = plt.subplots(figsize=(12, 0.55 * len(rows) + 2))
    for bar in bars:
        y = index[bar['row']]
        length = bar['end'] - bar['start']
        if bar['kind'] == 'proctor':
            ax.barh(y, length, left=bar['start'], height=0.25, color=PROCTOR_COLOR)
            continue
        ax.barh(
            y,
            length,
            left=bar['start'],
            height=0.6,
            color=colors(bar['patient'] % 10),
            edgecolor='#2E4053',
        )
        ax.text(bar['start'] + 1, y, str(bar['patient']), va='center', fontsize=8)

    for minute in range(0, horizon + 1, GRID_MINUTES):
        ax.axvline(minute, color='#D5D8DC', linewidth=0.8, zorder=0)
    ax.axvline(inst.shift_length, color='#C0392B', linestyle='--', linewidth=1.2)

    ax.set_yticks(list(range(len(rows))))
    ax.set_yticklabels(list(reversed(rows)))
    ax.set_xlim(0, horizon + 5)
    ax.set_xlabel('Minutes from shift start')
    ax.set_title(title or f'{inst} schedule')
    fig.tight_layout()
    path = _ensure_parent(path)
    fig.savefig(path, format='svg')
    plt.close(fig)
    return path
