import os
import pytest

from coopuav.geometry import Point3
from coopuav.channel import RadioParams
from coopuav.config import ScenarioConfig, UavSpec, TaskSpec, load_scenario, write_scenario, \
    isScenarioConfig
from coopuav.names import SCHEMES
from coopuav.pylab.errors import ScenarioParseError, ValidationError, EXIT_VALIDATION

SCENARIO = '''
[scenario]
scheme = noncooperative
seed = 4
n_subchannels = 3
total_slots = 50

[bs]
position = 0, 0, 25

[radio]
rician_k_db = 6

[uav.0]
position = 100, 0, 80
tasks = a, b

[uav.1]
position = -50, 20, 120
tasks = c

[task.a]
center = 100, 0, 0
failure_tolerance = 0.5
data_volume = 1e5
sense_slots_required = 1

[task.b]
center = 200, 50, 0
failure_tolerance = 0.4
data_volume = 2e5
sense_slots_required = 2

[task.c]
center = -100, 0, 0
failure_tolerance = 0.6
data_volume = 0
sense_slots_required = 1
'''


def _write(tmp_path, text, name='scenario.ini'):
    path = tmp_path / name
    path.write_text(text)
    return str(path)

def _validation_key(tmp_path, text):
    with pytest.raises(ValidationError) as e:
        load_scenario(_write(tmp_path, text))
    return e.value.key


def test_load_scenario(tmp_path):
    cfg = load_scenario(_write(tmp_path, SCENARIO))
    assert isScenarioConfig(cfg)
    assert cfg.SCHEME == SCHEMES.NONCOOPERATIVE
    assert cfg.SEED == 4
    assert cfg.N_SUBCHANNELS == 3
    assert cfg.TOTAL_SLOTS == 50
    assert cfg.COMPLETION_BUDGET == pytest.approx(50 * 0.1)
    assert cfg.BS_POSITION == Point3(0., 0., 25.)
    assert cfg.RADIO.rician_k_db == 6.
    assert cfg.RADIO.los_sigmoid_a == RadioParams().los_sigmoid_a
    assert cfg.UAVS[0].tasks == ('a', 'b')
    assert cfg.TASKS['b'].sense_slots_required == 2
    assert cfg.TASKS['c'].data_volume == 0.

def test_write_then_load(tmp_path, small_cfg):
    path = str(tmp_path / 'out.ini')
    write_scenario(small_cfg, path)
    back = load_scenario(path)
    assert back.UAVS == small_cfg.UAVS
    assert back.TASKS == small_cfg.TASKS
    assert back.RADIO == small_cfg.RADIO
    assert back.suffix() == small_cfg.suffix()

def test_missing_file(tmp_path):
    with pytest.raises(ScenarioParseError) as e:
        load_scenario(str(tmp_path / 'nope.ini'))
    assert e.value.exit_code == EXIT_VALIDATION

def test_not_ini(tmp_path):
    with pytest.raises(ScenarioParseError):
        load_scenario(_write(tmp_path, 'position = 1, 2, 3\n'))

def test_unknown_section(tmp_path):
    assert _validation_key(tmp_path, SCENARIO + '\n[weather]\nwind = 3\n') == 'weather'

def test_unknown_key(tmp_path):
    text = SCENARIO.replace('seed = 4', 'seed = 4\ncolour = red')
    assert _validation_key(tmp_path, text) == 'scenario.colour'

def test_missing_bs(tmp_path):
    text = SCENARIO.replace('[bs]\nposition = 0, 0, 25\n', '')
    assert _validation_key(tmp_path, text) == 'bs.position'

def test_bad_values(tmp_path):
    assert _validation_key(tmp_path, SCENARIO.replace('n_subchannels = 3',
        'n_subchannels = 0')) == 'scenario.n_subchannels'
    assert _validation_key(tmp_path, SCENARIO.replace('n_subchannels = 3',
        'n_subchannels = 2.5')) == 'scenario.n_subchannels'
    assert _validation_key(tmp_path, SCENARIO.replace('failure_tolerance = 0.4',
        'failure_tolerance = 1.5')) == 'task.b.failure_tolerance'
    assert _validation_key(tmp_path, SCENARIO.replace('position = 100, 0, 80',
        'position = 100, 0')) == 'uav.0.position'
    assert _validation_key(tmp_path, SCENARIO.replace('scheme = noncooperative',
        'scheme = telepathy')) == 'scenario.scheme'

def test_colliding_uav_ids(tmp_path):
    text = SCENARIO + '\n[uav.01]\nposition = 0, 50, 90\n'
    assert _validation_key(tmp_path, text) == 'uav.01'

def test_task_ownership(tmp_path):
    assert _validation_key(tmp_path, SCENARIO.replace('tasks = c', 'tasks = c, a')) == \
        'uav.1.tasks'
    assert _validation_key(tmp_path, SCENARIO.replace('tasks = c', 'tasks = d')) == \
        'uav.1.tasks'
    assert _validation_key(tmp_path, SCENARIO.replace('tasks = c', 'tasks =')) == 'task.c'

def test_copy_with(tiny_cfg):
    other = tiny_cfg.copy_with(seed=9, scheme=SCHEMES.SEPARATE)
    assert other.SEED == 9 and other.SCHEME == SCHEMES.SEPARATE
    assert tiny_cfg.SEED == 0
    assert other.suffix() == 'separate_k2_s9'
    with pytest.raises(AttributeError):
        tiny_cfg.copy_with(colour='red')
    with pytest.raises(ValidationError):
        tiny_cfg.copy_with(n_subchannels=0)

def test_metadata_file(tmp_path, tiny_cfg):
    path = str(tmp_path / 'metadata.txt')
    tiny_cfg.make_metadata_file(path)
    text = open(path).read()
    assert 'Scheme: cooperative' in text
    assert 'Subchannels: 2' in text
    assert 'UAV 0' in text

def test_needs_a_uav():
    with pytest.raises(ValidationError) as e:
        ScenarioConfig(bs_position=Point3(0., 0., 25.), uavs={}, tasks={})
    assert e.value.key == 'uav'

def test_altitudes_relative_to_the_base_station(tmp_path):
    assert _validation_key(tmp_path, SCENARIO.replace('position = 0, 0, 25',
        'position = 0, 0, 60')) == 'sensing.min_altitude'
    text = SCENARIO.replace('[radio]', '[sensing]\nmin_altitude = 30\n\n[radio]')
    assert _validation_key(tmp_path, text.replace('position = 100, 0, 80',
        'position = 100, 0, 20')) == 'uav.0.position'
