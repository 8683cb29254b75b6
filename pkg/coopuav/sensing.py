'''Sensing-success model, feasible sensing regions and per-slot sensing progress.

The probability that one sensing slot succeeds decays exponentially with the
distance between the UAV and the center of the sensing area:

    p_success(d) = exp(-decay * d)

so the region where the failure probability stays below a tolerance is a
ball around the center, cut by the minimum flying height: a spherical crown.
The functional form is isolated in `success_probability` and
`feasible_radius`.
'''
import enum
import math
import numpy as np
from dataclasses import dataclass
from coopuav.logger import logger

from .geometry import Point3, SphericalCrown, distance, crown_contains
from .pylab import random as plrandom
from .pylab.errors import InfeasibleTaskError, OutOfRegionError


class TaskState(enum.IntEnum):
    '''Lifecycle of a sensing task. States only move forward.
    '''
    PENDING = 0
    ACTIVE = 1
    SENSED = 2
    DELIVERED = 3


@dataclass(frozen=True)
class SensingModel:
    '''Parameters of the sensing-success model

    Parameters
    ----------
    decay : float
        Decay rate of the success probability, 1/m
    min_altitude : float
        Minimum flying height, m
    max_radius : float
        Cap on the crown radius for very loose tolerances, m
    '''
    decay: float = 0.005
    min_altitude: float = 50.
    max_radius: float = 500.

    def __post_init__(self):
        if not (self.decay > 0 and math.isfinite(self.decay)):
            raise ValueError('`decay` ({}) must be > 0'.format(self.decay))
        if not math.isfinite(self.min_altitude):
            raise ValueError('`min_altitude` ({}) must be finite'.format(self.min_altitude))
        if not self.max_radius > 0:
            raise ValueError('`max_radius` ({}) must be > 0'.format(self.max_radius))


class SensingTask:
    '''A sensing task and its progress.

    Sensed data becomes available for upload slot by slot: after `n` of the
    `sense_slots_required` successful slots, `collected` is
    `n / sense_slots_required * data_volume`.

    Parameters
    ----------
    id : str
        Name of the task
    center : Point3
        Center of the sensing area
    failure_tolerance : float
        Largest acceptable per-slot failure probability, in (0, 1)
    data_volume : float
        Bits produced by the task
    sense_slots_required : int
        Successful sensing slots needed to complete the task
    '''
    def __init__(self, id: str, center: Point3, failure_tolerance: float, data_volume: float,
        sense_slots_required: int):
        if not 0 < failure_tolerance < 1:
            raise ValueError('`failure_tolerance` ({}) must be in (0, 1)'.format(failure_tolerance))
        if data_volume < 0:
            raise ValueError('`data_volume` ({}) must be >= 0'.format(data_volume))
        if sense_slots_required < 1:
            raise ValueError('`sense_slots_required` ({}) must be >= 1'.format(sense_slots_required))
        self.id = id
        self.center = center
        self.failure_tolerance = float(failure_tolerance)
        self.data_volume = float(data_volume)
        self.sense_slots_required = int(sense_slots_required)
        self.slots_sensed = 0
        self.collected = 0.
        self.delivered = 0.
        self.state = TaskState.PENDING

    def __str__(self):
        return 'SensingTask({}, {}, sensed {}/{}, delivered {:.0f}/{:.0f} bits)'.format(
            self.id, self.state.name, self.slots_sensed, self.sense_slots_required,
            self.delivered, self.data_volume)

    @property
    def backlog(self) -> float:
        '''Bits collected but not yet delivered
        '''
        return max(self.collected - self.delivered, 0.)

    def _move_to(self, state: TaskState):
        if state < self.state:
            raise ValueError('Task `{}` cannot move back from {} to {}'.format(
                self.id, self.state.name, state.name))
        self.state = state

    def activate(self):
        if self.state == TaskState.PENDING:
            self._move_to(TaskState.ACTIVE)

    def deliver(self, bits: float) -> float:
        '''Deliver up to `bits` of the backlog. Returns the bits accepted.
        '''
        if bits < 0:
            raise ValueError('`bits` ({}) must be >= 0'.format(bits))
        backlog = self.backlog
        if bits >= backlog:
            accepted = backlog
            self.delivered = max(self.collected, self.delivered)
        else:
            accepted = bits
            self.delivered += bits
        if self.state == TaskState.SENSED and self.delivered >= self.data_volume:
            self.delivered = self.data_volume
            self._move_to(TaskState.DELIVERED)
        return accepted


def success_probability(model: SensingModel, uav: Point3, task: SensingTask) -> float:
    '''Probability that one sensing slot from `uav` succeeds
    '''
    return math.exp(-model.decay * distance(uav, task.center))

def feasible_radius(model: SensingModel, failure_tolerance: float) -> float:
    '''Largest distance whose failure probability does not exceed the
    tolerance, capped at `model.max_radius`
    '''
    return min(-math.log(1 - failure_tolerance) / model.decay, model.max_radius)

def feasible_region(model: SensingModel, task: SensingTask) -> SphericalCrown:
    '''Spherical crown from which `task` can be sensed

    Raises
    ------
    InfeasibleTaskError
        If the minimum altitude excludes the whole ball
    '''
    crown = SphericalCrown(center=task.center,
        radius=feasible_radius(model, task.failure_tolerance),
        min_altitude=model.min_altitude)
    if crown.is_empty:
        raise InfeasibleTaskError('Task `{}`: crown of radius {:.2f} m around {} lies below ' \
            'the minimum altitude {:.2f} m'.format(task.id, crown.radius, task.center,
            model.min_altitude))
    return crown

def best_sensing_point(model: SensingModel, task: SensingTask) -> Point3:
    '''Crown member with the highest success probability (closest to the
    task center)
    '''
    return feasible_region(model, task).nearest_to_center()

def expected_sensing_slots(model: SensingModel, uav: Point3, task: SensingTask) -> float:
    '''Expected number of slots to finish sensing `task` from `uav`
    '''
    remaining = task.sense_slots_required - task.slots_sensed
    return remaining / success_probability(model, uav, task)

def record_sensing(task: SensingTask, uav: Point3, model: SensingModel,
    rng_stream: np.random.Generator) -> SensingTask:
    '''Execute one sensing slot of `task` from `uav`.

    The slot succeeds with `success_probability`. Each success makes another
    share of the data volume available for upload; the last one moves the
    task to SENSED (or straight to DELIVERED when there is nothing to send).

    Raises
    ------
    OutOfRegionError
        If `uav` is outside the feasible region of `task`
    '''
    if task.state != TaskState.ACTIVE:
        raise ValueError('Task `{}` is {}, not ACTIVE'.format(task.id, task.state.name))
    crown = feasible_region(model, task)
    if not crown_contains(crown, uav):
        raise OutOfRegionError('Task `{}`: UAV at {} is outside the feasible region ' \
            '(center {}, radius {:.2f} m, min altitude {:.2f} m)'.format(task.id, uav,
            crown.center, crown.radius, crown.min_altitude))

    p = success_probability(model, uav, task)
    if plrandom.bernoulli(p, rng_stream):
        task.slots_sensed += 1
        task.collected = task.data_volume * task.slots_sensed / task.sense_slots_required
        if task.slots_sensed >= task.sense_slots_required:
            task.collected = task.data_volume
            task._move_to(TaskState.SENSED)
            logger.debug('Task `{}` sensed'.format(task.id))
            if task.data_volume == 0:
                task._move_to(TaskState.DELIVERED)
    return task
