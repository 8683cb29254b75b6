import pytest
import numpy as np

from coopuav.geometry import Point3
from coopuav.channel import RadioParams
from coopuav.sensing import SensingModel, SensingTask, TaskState
from coopuav.config import ScenarioConfig, UavSpec, TaskSpec
from coopuav.synthetic import make_scenario


@pytest.fixture
def params():
    return RadioParams()

@pytest.fixture
def model():
    return SensingModel()

@pytest.fixture
def bs():
    return Point3(0., 0., 25.)

@pytest.fixture
def rng():
    return np.random.default_rng(1234)

@pytest.fixture
def small_cfg():
    '''3 UAVs, 4 tasks in a small cell, 120 slots'''
    return make_scenario(n_uavs=3, n_tasks=4, seed=3, cell_radius=150., n_subchannels=4,
        total_slots=120, min_separation=50., data_volume=(2e5, 4e5),
        sense_slots_required=(1, 2))

@pytest.fixture
def tiny_cfg():
    '''One UAV right above its task, close to the base station'''
    return ScenarioConfig(bs_position=Point3(0., 0., 25.),
        uavs={0: UavSpec(position=Point3(100., 0., 80.), tasks=('a',))},
        tasks={'a': TaskSpec(center=Point3(100., 0., 0.), failure_tolerance=0.5,
            data_volume=1e5, sense_slots_required=1)},
        n_subchannels=2, total_slots=30)


def sensed_task(id: str, center: Point3, volume: float=1e6) -> SensingTask:
    '''A task whose data is collected and waits for upload'''
    t = SensingTask(id=id, center=center, failure_tolerance=0.5, data_volume=volume,
        sense_slots_required=1)
    t.slots_sensed = 1
    t.collected = volume
    t.state = TaskState.SENSED
    return t
