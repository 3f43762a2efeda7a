"""JSON documents for instances, schedules, reports and command configs."""
import dataclasses
import json
from pathlib import Path

import numpy as np
from django.core.serializers.json import DjangoJSONEncoder

from .core import Instance, Patient, Scenario, schedule_from_mapping
from .exceptions import InvalidInstance, InvalidSchedule

INSTANCE_KEYS = ('label', 'num_nurses', 'num_chairs', 'shift_length', 'overtime_limit')


class SchedulingJSONEncoder(DjangoJSONEncoder):
    def default(self, o):
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if dataclasses.is_dataclass(o):
            return dataclasses.asdict(o)
        if isinstance(o, Path):
            return str(o)
        return super().default(o)


def dumps(data):
    return json.dumps(data, cls=SchedulingJSONEncoder, indent=2) + '\n'


def write_json(data, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(data))
    return path


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f'{path} is not valid JSON: {exc}') from exc


def instance_to_dict(inst):
    return {
        'label': inst.label,
        'num_nurses': inst.num_nurses,
        'num_chairs': inst.num_chairs,
        'shift_length': inst.shift_length,
        'overtime_limit': inst.overtime_limit,
        'patients': [{'id': p.id, 'class_id': p.class_id} for p in inst.patients],
        'scenarios': [
            {
                'probability': s.probability,
                'premed': list(s.premed),
                'infusion': list(s.infusion),
            }
            for s in inst.scenarios
        ],
    }


def instance_from_dict(data):
    missing = [key for key in (*INSTANCE_KEYS, 'patients', 'scenarios') if key not in data]
    if missing:
        raise InvalidInstance(f'Instance document lacks {", ".join(missing)}')
    try:
        patients = [
            Patient(int(p['id']), int(p.get('class_id', 1)), p.get('notes', ''))
            for p in data['patients']
        ]
        scenarios = [
            Scenario(s['premed'], s['infusion'], float(s['probability']))
            for s in data['scenarios']
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInstance(f'Malformed patient or scenario entry: {exc}') from exc
    return Instance(
        patients=patients,
        scenarios=scenarios,
        num_nurses=int(data['num_nurses']),
        num_chairs=int(data['num_chairs']),
        shift_length=int(data['shift_length']),
        overtime_limit=int(data['overtime_limit']),
        big_m=data.get('big_m'),
        label=str(data['label']),
    )


def load_instance(path):
    return instance_from_dict(read_json(path))


def dump_instance(inst, path):
    return write_json(instance_to_dict(inst), path)


def schedule_to_dict(schedule):
    return {'sequence': list(schedule.sequence), 'appointment': list(schedule.appointment)}


def schedule_from_dict(data):
    try:
        return schedule_from_mapping(data['sequence'], data['appointment'])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidSchedule([f'malformed schedule document: {exc}']) from exc


def load_schedule(path):
    return schedule_from_dict(read_json(path))


def dump_schedule(schedule, path):
    return write_json(schedule_to_dict(schedule), path)


def load_config(path):
    """Command options from a JSON object; dashed keys become underscored."""
    data = read_json(path)
    if not isinstance(data, dict):
        raise ValueError(f'{path} must hold a JSON object')
    return {key.replace('-', '_'): value for key, value in data.items()}
