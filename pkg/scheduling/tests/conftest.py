import pytest

from scheduling.core import Instance, Patient, Scenario, equiprobable
from scheduling.generator import GenSpec, generate_instance
from scheduling.serializers import dump_instance


def make_instance(
    premed, infusion, nurses=1, chairs=1, shift_length=240, overtime_limit=180, label='toy'
):
    """Instance from per-scenario premed and infusion rows, equally likely."""
    probabilities = equiprobable(len(premed))
    scenarios = [Scenario(s, t, p) for s, t, p in zip(premed, infusion, probabilities)]
    return Instance(
        patients=[Patient(i) for i in range(len(premed[0]))],
        scenarios=scenarios,
        num_nurses=nurses,
        num_chairs=chairs,
        shift_length=shift_length,
        overtime_limit=overtime_limit,
        label=label,
    )


@pytest.fixture
def single_patient():
    return make_instance([[10]], [[30]], label='single')


@pytest.fixture
def two_patients():
    return make_instance([[10, 5]], [[30, 20]], nurses=1, chairs=2, label='pair')


@pytest.fixture
def diverging():
    """Two scenarios whose best appointments cannot agree in one iteration."""
    return make_instance(
        [[10, 5], [20, 10]],
        [[30, 20], [80, 60]],
        nurses=1,
        chairs=1,
        label='diverging',
    )


@pytest.fixture
def small_instance():
    return generate_instance(spec=GenSpec(num_patients=4, num_scenarios=3, seed=11))


@pytest.fixture
def instance_file(tmp_path):
    def write(inst, name='instance.json'):
        return str(dump_instance(inst, tmp_path / name))

    return write
