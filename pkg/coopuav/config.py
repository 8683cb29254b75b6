'''Scenario configuration: the parameters of one simulation and the INI
files they are read from and written to.

A scenario file has the sections

    [scenario]      scheme, seed, n_subchannels, snr_threshold_db, r_min, p_max,
                    v_max, max_altitude, slot_duration, total_slots,
                    completion_budget, node_budget
    [bs]            position = x, y, z
    [radio]         any field of `channel.RadioParams`
    [sensing]       decay, min_altitude, max_radius
    [uav.<id>]      position = x, y, z ; tasks = <task id>, <task id>, ...
    [task.<id>]     center = x, y, z ; failure_tolerance ; data_volume ;
                    sense_slots_required

Everything except the base station position, the UAVs and the tasks has a
default. Unknown sections and keys are errors.
'''
import copy
import math
import configparser
import dataclasses
from dataclasses import dataclass
from coopuav.logger import logger

# Typing
from typing import Any, Callable, Dict, Tuple

from .geometry import Point3
from .channel import RadioParams
from .sensing import SensingModel
from .names import SCHEMES
from . import pylab as pl
from .pylab.errors import ScenarioParseError, ValidationError

# Defaults
DEFAULT_N_SUBCHANNELS = 8
DEFAULT_SNR_THRESHOLD_DB = 20.
DEFAULT_R_MIN = 2e5
DEFAULT_P_MAX = 0.2
DEFAULT_V_MAX = 20.
DEFAULT_MAX_ALTITUDE = 300.
DEFAULT_SLOT_DURATION = 0.1
DEFAULT_TOTAL_SLOTS = 2000
DEFAULT_NODE_BUDGET = 1000000

SCENARIO_KEYS = ('scheme', 'seed', 'n_subchannels', 'snr_threshold_db', 'r_min', 'p_max',
    'v_max', 'max_altitude', 'slot_duration', 'total_slots', 'completion_budget',
    'node_budget')
UAV_KEYS = ('position', 'tasks')
TASK_KEYS = ('center', 'failure_tolerance', 'data_volume', 'sense_slots_required')


def isScenarioConfig(x: Any) -> bool:
    '''Checks if the input is a scenario config object

    Parameters
    ----------
    x : any

    Returns
    -------
    bool
    '''
    return x is not None and issubclass(x.__class__, _BaseConfig)


@dataclass(frozen=True)
class UavSpec:
    '''Initial state of a UAV: its position and its tasks in execution order
    '''
    position: Point3
    tasks: Tuple[str, ...]


@dataclass(frozen=True)
class TaskSpec:
    center: Point3
    failure_tolerance: float
    data_volume: float
    sense_slots_required: int


class _BaseConfig(pl.Saveable):

    def __str__(self):
        s = '{}'.format(self.__class__.__name__)
        for k,v in vars(self).items():
            s += '\n\t{}: {}'.format(k,v)
        return s

    def suffix(self):
        raise NotImplementedError('Need to implement')


class ScenarioConfig(_BaseConfig):
    '''Parameters of one simulation

    System
    ------
    - SCHEME : str
        - One of `names.SCHEMES`
    - SEED : int
        - Seed of the random streams
    - N_SUBCHANNELS : int
        - Subchannels of the cell
    - SNR_THRESHOLD_DB : float
        - Mode-selection threshold on the expected U2N SNR at full power
    - R_MIN : float
        - Minimum rate of every active link, bit/s
    - P_MAX : float
        - Maximum transmit power per subchannel, W
    - V_MAX : float
        - UAV speed cap, m/s
    - MAX_ALTITUDE : float
        - Highest allowed communication point, m
    - SLOT_DURATION : float
        - s
    - TOTAL_SLOTS : int
        - Slots simulated
    - COMPLETION_BUDGET : float
        - Time by which every plan should be flown, s. Defaults to
          TOTAL_SLOTS * SLOT_DURATION
    - NODE_BUDGET : int
        - Branch-and-bound node cap

    Cell
    ----
    - BS_POSITION : Point3
    - RADIO : channel.RadioParams
    - SENSING : sensing.SensingModel
    - UAVS : dict (int -> UavSpec)
    - TASKS : dict (str -> TaskSpec)
    '''
    def __init__(self, bs_position: Point3, uavs: Dict[int, UavSpec], tasks: Dict[str, TaskSpec],
        scheme: str=SCHEMES.COOPERATIVE, seed: int=0,
        n_subchannels: int=DEFAULT_N_SUBCHANNELS,
        snr_threshold_db: float=DEFAULT_SNR_THRESHOLD_DB, r_min: float=DEFAULT_R_MIN,
        p_max: float=DEFAULT_P_MAX, v_max: float=DEFAULT_V_MAX,
        max_altitude: float=DEFAULT_MAX_ALTITUDE, slot_duration: float=DEFAULT_SLOT_DURATION,
        total_slots: int=DEFAULT_TOTAL_SLOTS, completion_budget: float=None,
        node_budget: int=DEFAULT_NODE_BUDGET, radio: RadioParams=None,
        sensing: SensingModel=None):
        self.SCHEME = scheme
        self.SEED = seed
        self.N_SUBCHANNELS = n_subchannels
        self.SNR_THRESHOLD_DB = snr_threshold_db
        self.R_MIN = r_min
        self.P_MAX = p_max
        self.V_MAX = v_max
        self.MAX_ALTITUDE = max_altitude
        self.SLOT_DURATION = slot_duration
        self.TOTAL_SLOTS = total_slots
        if completion_budget is None:
            completion_budget = total_slots * slot_duration
        self.COMPLETION_BUDGET = completion_budget
        self.NODE_BUDGET = node_budget

        self.BS_POSITION = bs_position
        self.RADIO = radio if radio is not None else RadioParams()
        self.SENSING = sensing if sensing is not None else SensingModel()
        self.UAVS = dict(uavs)
        self.TASKS = dict(tasks)
        self.validate()

    def validate(self):
        '''Raises a `ValidationError` naming the first offending key
        '''
        if self.SCHEME not in SCHEMES:
            raise ValidationError('scenario.scheme', '{} not recognized. Options: {}'.format(
                self.SCHEME, list(SCHEMES)))
        if not pl.isint(self.SEED) or self.SEED < 0:
            raise ValidationError('scenario.seed', '{} must be an int >= 0'.format(self.SEED))
        if not pl.isint(self.N_SUBCHANNELS) or self.N_SUBCHANNELS < 1:
            raise ValidationError('scenario.n_subchannels', '{} must be an int >= 1'.format(
                self.N_SUBCHANNELS))
        if not pl.isint(self.TOTAL_SLOTS) or self.TOTAL_SLOTS < 1:
            raise ValidationError('scenario.total_slots', '{} must be an int >= 1'.format(
                self.TOTAL_SLOTS))
        if not pl.isint(self.NODE_BUDGET) or self.NODE_BUDGET < 1:
            raise ValidationError('scenario.node_budget', '{} must be an int >= 1'.format(
                self.NODE_BUDGET))
        if not pl.isfinite(self.SNR_THRESHOLD_DB):
            raise ValidationError('scenario.snr_threshold_db', 'must be finite')
        for key, value in (('r_min', self.R_MIN),):
            if not (pl.isfinite(value) and value >= 0):
                raise ValidationError('scenario.' + key, '{} must be >= 0'.format(value))
        for key, value in (('p_max', self.P_MAX), ('v_max', self.V_MAX),
            ('slot_duration', self.SLOT_DURATION), ('completion_budget', self.COMPLETION_BUDGET),
            ('max_altitude', self.MAX_ALTITUDE)):
            if not (pl.isfinite(value) and value > 0):
                raise ValidationError('scenario.' + key, '{} must be > 0'.format(value))
        if self.BS_POSITION is None:
            raise ValidationError('bs.position', 'missing')
        if self.BS_POSITION.z < 0:
            raise ValidationError('bs.position', 'altitude must be >= 0')
        if self.SENSING.min_altitude < self.BS_POSITION.z + 1:
            raise ValidationError('sensing.min_altitude', '{} must be at least 1 m above the ' \
                'base station antenna ({})'.format(self.SENSING.min_altitude,
                self.BS_POSITION.z))
        if self.MAX_ALTITUDE < self.SENSING.min_altitude:
            raise ValidationError('scenario.max_altitude', '{} is below the minimum ' \
                'altitude {}'.format(self.MAX_ALTITUDE, self.SENSING.min_altitude))
        if len(self.UAVS) == 0:
            raise ValidationError('uav', 'at least one UAV is needed')

        owner = {}
        for uid, spec in self.UAVS.items():
            if not pl.isint(uid) or uid < 0:
                raise ValidationError('uav.{}'.format(uid), 'id must be an int >= 0')
            if spec.position.z < self.BS_POSITION.z + 1:
                raise ValidationError('uav.{}.position'.format(uid), 'altitude {} must be at ' \
                    'least 1 m above the base station antenna'.format(spec.position.z))
            for tid in spec.tasks:
                if tid not in self.TASKS:
                    raise ValidationError('uav.{}.tasks'.format(uid),
                        'task `{}` is not defined'.format(tid))
                if tid in owner:
                    raise ValidationError('uav.{}.tasks'.format(uid),
                        'task `{}` already belongs to UAV {}'.format(tid, owner[tid]))
                owner[tid] = uid
        for tid, spec in self.TASKS.items():
            if tid not in owner:
                raise ValidationError('task.{}'.format(tid), 'not assigned to any UAV')
            if not 0 < spec.failure_tolerance < 1:
                raise ValidationError('task.{}.failure_tolerance'.format(tid),
                    '{} must be in (0, 1)'.format(spec.failure_tolerance))
            if not (pl.isfinite(spec.data_volume) and spec.data_volume >= 0):
                raise ValidationError('task.{}.data_volume'.format(tid),
                    '{} must be >= 0'.format(spec.data_volume))
            if not pl.isint(spec.sense_slots_required) or spec.sense_slots_required < 1:
                raise ValidationError('task.{}.sense_slots_required'.format(tid),
                    '{} must be an int >= 1'.format(spec.sense_slots_required))

    def suffix(self) -> str:
        '''Short name of the run'''
        return '{}_k{}_s{}'.format(self.SCHEME, self.N_SUBCHANNELS, self.SEED)

    def copy_with(self, **kwargs) -> 'ScenarioConfig':
        '''Copy with some attributes replaced. Keys are the lowercase names
        of the attributes (`scheme`, `seed`, `n_subchannels`, ...).
        '''
        other = copy.deepcopy(self)
        for k, v in kwargs.items():
            attr = k.upper()
            if not hasattr(other, attr):
                raise AttributeError('`{}` is not a scenario attribute'.format(k))
            setattr(other, attr, v)
        other.validate()
        return other

    def make_metadata_file(self, fname: str):
        '''Make a metadata file that does an overview of the parameters in this class
        '''
        mystr = 'Global parameters\n' \
            '-----------------\n' \
            'Scheme: {scheme}\n' \
            'Random seed: {seed}\n' \
            'Subchannels: {k}\n' \
            'Slots: {slots} x {dt} s\n' \
            'Completion budget: {budget} s\n\n' \
            'Radio resource management\n' \
            '-------------------------\n' \
            'Mode-selection threshold: {thr} dB\n' \
            'Minimum rate: {r_min:.4E} bit/s\n' \
            'Maximum power per subchannel: {p_max} W\n' \
            'Branch-and-bound node budget: {nodes}\n\n' \
            'Flight\n' \
            '------\n' \
            'Maximum speed: {v_max} m/s\n' \
            'Altitude limits: [{h_min}, {h_max}] m\n\n' \
            'Cell\n' \
            '----\n' \
            'Base station: {bs}\n' \
            '{uavs}\n'.format(scheme=self.SCHEME, seed=self.SEED, k=self.N_SUBCHANNELS,
                slots=self.TOTAL_SLOTS, dt=self.SLOT_DURATION, budget=self.COMPLETION_BUDGET,
                thr=self.SNR_THRESHOLD_DB, r_min=self.R_MIN, p_max=self.P_MAX,
                nodes=self.NODE_BUDGET, v_max=self.V_MAX, h_min=self.SENSING.min_altitude,
                h_max=self.MAX_ALTITUDE, bs=self.BS_POSITION,
                uavs='\n'.join('UAV {}: start {}, tasks {}'.format(uid, spec.position,
                    ', '.join(spec.tasks)) for uid, spec in sorted(self.UAVS.items())))
        mystr += '\n{}\n{}\n'.format(self.RADIO, self.SENSING)

        def write(tmp):
            with open(tmp, 'w') as f:
                f.write(mystr)
        pl.atomic_write(fname, write)


# ------------------------------------------------------------------------------
# INI files
# ------------------------------------------------------------------------------
def _number(section: str, key: str, value: str, cast: Callable=float) -> Any:
    try:
        if cast is int:
            f = float(value)
            if not f.is_integer():
                raise ValueError
            return int(f)
        return cast(value)
    except ValueError:
        raise ValidationError('{}.{}'.format(section, key), '`{}` is not a valid {}'.format(
            value, 'integer' if cast is int else 'number'))

def _point(section: str, key: str, value: str) -> Point3:
    parts = [p.strip() for p in value.split(',')]
    if len(parts) != 3:
        raise ValidationError('{}.{}'.format(section, key), '`{}` must be `x, y, z`'.format(value))
    coords = [_number(section, key, p) for p in parts]
    if not all(math.isfinite(c) for c in coords):
        raise ValidationError('{}.{}'.format(section, key), 'coordinates must be finite')
    return Point3(*coords)

def _check_keys(section: str, items: Dict[str, str], allowed: Tuple[str, ...]):
    for key in items:
        if key not in allowed:
            raise ValidationError('{}.{}'.format(section, key), 'unknown key')

def _require(section: str, items: Dict[str, str], key: str) -> str:
    if key not in items:
        raise ValidationError('{}.{}'.format(section, key), 'missing')
    return items[key]

def _dataclass_from_section(cls: type, section: str, items: Dict[str, str]) -> Any:
    fields = tuple(f.name for f in dataclasses.fields(cls))
    _check_keys(section, items, fields)
    kwargs = {k: _number(section, k, v) for k, v in items.items()}
    try:
        return cls(**kwargs)
    except ValueError as e:
        raise ValidationError(section, str(e))

def load_scenario(path: str) -> ScenarioConfig:
    '''Read and validate a scenario file

    Parameters
    ----------
    path : str
        INI scenario file

    Returns
    -------
    ScenarioConfig

    Raises
    ------
    ScenarioParseError
        If the file cannot be read or is not valid INI
    ValidationError
        If a value is missing, unknown or invalid
    '''
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(str(path), 'r') as f:
            parser.read_file(f)
    except (OSError, configparser.Error) as e:
        raise ScenarioParseError('Cannot parse scenario `{}`: {}'.format(path, e))

    kwargs = {}
    bs_position = None
    uavs = {}
    tasks = {}
    for section in parser.sections():
        items = dict(parser.items(section))
        if section == 'scenario':
            _check_keys(section, items, SCENARIO_KEYS)
            for key, value in items.items():
                if key == 'scheme':
                    kwargs[key] = value.strip()
                elif key in ('seed', 'n_subchannels', 'total_slots', 'node_budget'):
                    kwargs[key] = _number(section, key, value, int)
                else:
                    kwargs[key] = _number(section, key, value)
        elif section == 'bs':
            _check_keys(section, items, ('position',))
            bs_position = _point(section, 'position', _require(section, items, 'position'))
        elif section == 'radio':
            kwargs['radio'] = _dataclass_from_section(RadioParams, section, items)
        elif section == 'sensing':
            kwargs['sensing'] = _dataclass_from_section(SensingModel, section, items)
        elif section.startswith('uav.'):
            _check_keys(section, items, UAV_KEYS)
            uid = _number(section, 'id', section[len('uav.'):], int)
            if uid in uavs:
                raise ValidationError(section, 'UAV id {} is already defined'.format(uid))
            task_ids = tuple(t.strip() for t in items.get('tasks', '').split(',') if t.strip())
            uavs[uid] = UavSpec(position=_point(section, 'position',
                _require(section, items, 'position')), tasks=task_ids)
        elif section.startswith('task.'):
            _check_keys(section, items, TASK_KEYS)
            tid = section[len('task.'):]
            if not tid:
                raise ValidationError(section, 'empty task id')
            tasks[tid] = TaskSpec(
                center=_point(section, 'center', _require(section, items, 'center')),
                failure_tolerance=_number(section, 'failure_tolerance',
                    _require(section, items, 'failure_tolerance')),
                data_volume=_number(section, 'data_volume',
                    _require(section, items, 'data_volume')),
                sense_slots_required=_number(section, 'sense_slots_required',
                    _require(section, items, 'sense_slots_required'), int))
        else:
            raise ValidationError(section, 'unknown section')

    if bs_position is None:
        raise ValidationError('bs.position', 'missing')
    cfg = ScenarioConfig(bs_position=bs_position, uavs=uavs, tasks=tasks, **kwargs)
    logger.info('Loaded scenario `{}`: {} UAVs, {} tasks, scheme {}'.format(path,
        len(cfg.UAVS), len(cfg.TASKS), cfg.SCHEME))
    return cfg

def _fmt_point(p: Point3) -> str:
    return '{!r}, {!r}, {!r}'.format(p.x, p.y, p.z)

def write_scenario(cfg: ScenarioConfig, path: str):
    '''Write `cfg` as a scenario file that `load_scenario` reads back
    '''
    if not isScenarioConfig(cfg):
        raise TypeError('`cfg` ({}) must be a ScenarioConfig'.format(type(cfg)))
    parser = configparser.ConfigParser(interpolation=None)
    parser['scenario'] = {
        'scheme': cfg.SCHEME, 'seed': str(cfg.SEED), 'n_subchannels': str(cfg.N_SUBCHANNELS),
        'snr_threshold_db': repr(float(cfg.SNR_THRESHOLD_DB)), 'r_min': repr(float(cfg.R_MIN)),
        'p_max': repr(float(cfg.P_MAX)), 'v_max': repr(float(cfg.V_MAX)),
        'max_altitude': repr(float(cfg.MAX_ALTITUDE)),
        'slot_duration': repr(float(cfg.SLOT_DURATION)), 'total_slots': str(cfg.TOTAL_SLOTS),
        'completion_budget': repr(float(cfg.COMPLETION_BUDGET)),
        'node_budget': str(cfg.NODE_BUDGET)}
    parser['bs'] = {'position': _fmt_point(cfg.BS_POSITION)}
    parser['radio'] = {k: repr(float(v)) for k, v in dataclasses.asdict(cfg.RADIO).items()}
    parser['sensing'] = {k: repr(float(v)) for k, v in dataclasses.asdict(cfg.SENSING).items()}
    for uid, spec in sorted(cfg.UAVS.items()):
        parser['uav.{}'.format(uid)] = {'position': _fmt_point(spec.position),
            'tasks': ', '.join(spec.tasks)}
    for tid, spec in cfg.TASKS.items():
        parser['task.{}'.format(tid)] = {'center': _fmt_point(spec.center),
            'failure_tolerance': repr(float(spec.failure_tolerance)),
            'data_volume': repr(float(spec.data_volume)),
            'sense_slots_required': str(spec.sense_slots_required)}

    def write(tmp):
        with open(tmp, 'w') as f:
            parser.write(f)
    pl.atomic_write(path, write)
    logger.info('Scenario written to `{}`'.format(path))
