'''Generates synthetic scenarios
'''
import math
import numpy as np
from coopuav.logger import logger

# Typing
from typing import List

from .geometry import Point3, distance
from .channel import RadioParams
from .sensing import SensingModel
from .config import ScenarioConfig, UavSpec, TaskSpec
from .names import SCHEMES
from . import pylab as pl

# Tries per task center before the separation is relaxed
MAX_PLACEMENT_TRIES = 1000


def uniform_disc(rng: np.random.Generator, radius: float, n: int) -> np.ndarray:
    '''`n` points uniformly distributed in a disc of `radius` around the
    origin. Shape (n, 2)
    '''
    r = radius * np.sqrt(rng.random(n))
    phi = 2 * math.pi * rng.random(n)
    return np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1)

def _task_centers(rng: np.random.Generator, n: int, cell_radius: float,
    min_separation: float) -> List[Point3]:
    centers = []
    separation = min_separation
    while len(centers) < n:
        for _ in range(MAX_PLACEMENT_TRIES):
            x, y = uniform_disc(rng, cell_radius, 1)[0]
            p = Point3(float(x), float(y), 0.)
            if all(distance(p, c) >= separation for c in centers):
                centers.append(p)
                break
        else:
            separation /= 2
            logger.warning('Could not place task {} at {:.1f} m from the others; trying ' \
                '{:.1f} m'.format(len(centers), 2 * separation, separation))
    return centers

def make_scenario(n_uavs: int=5, n_tasks: int=10, seed: int=0, cell_radius: float=500.,
    scheme: str=SCHEMES.COOPERATIVE, n_subchannels: int=8, total_slots: int=2000,
    min_separation: float=100., start_altitude: tuple=(60., 150.),
    failure_tolerance: tuple=(0.4, 0.6), data_volume: tuple=(5e5, 2e6),
    sense_slots_required: tuple=(1, 5), bs_height: float=25., radio: RadioParams=None,
    sensing: SensingModel=None, **kwargs) -> ScenarioConfig:
    '''Random scenario in a circular cell centered on the base station.

    UAV start positions and ground task centers are uniform in the disc of
    `cell_radius`. Task centers are at least `min_separation` apart. Tasks
    are dealt to the UAVs round-robin and each UAV executes its tasks
    nearest-first from its start.

    Parameters
    ----------
    n_uavs, n_tasks : int
    seed : int
        Seed of the placement. Also the seed of the scenario
    cell_radius : float
        m
    scheme : str
    n_subchannels, total_slots : int
    min_separation : float
        Minimum distance between task centers, m
    start_altitude, failure_tolerance, data_volume : 2-tuple(float)
        Uniform ranges
    sense_slots_required : 2-tuple(int)
        Inclusive range
    bs_height : float
        m
    radio : channel.RadioParams, None
    sensing : sensing.SensingModel, None
    kwargs : dict
        Passed on to `ScenarioConfig`

    Returns
    -------
    ScenarioConfig
    '''
    if not pl.isint(n_uavs) or n_uavs < 1:
        raise ValueError('`n_uavs` ({}) must be an int >= 1'.format(n_uavs))
    if not pl.isint(n_tasks) or n_tasks < 1:
        raise ValueError('`n_tasks` ({}) must be an int >= 1'.format(n_tasks))
    if not cell_radius > 0:
        raise ValueError('`cell_radius` ({}) must be > 0'.format(cell_radius))
    sensing = sensing if sensing is not None else SensingModel()
    if start_altitude[0] < sensing.min_altitude:
        raise ValueError('`start_altitude` ({}) must be above the minimum altitude ' \
            '{}'.format(start_altitude, sensing.min_altitude))
    rng = np.random.default_rng(seed)

    starts = uniform_disc(rng, cell_radius, n_uavs)
    heights = rng.uniform(start_altitude[0], start_altitude[1], size=n_uavs)
    centers = _task_centers(rng, n_tasks, cell_radius, min_separation)

    tasks = {}
    for i, c in enumerate(centers):
        tasks['t{}'.format(i)] = TaskSpec(center=c,
            failure_tolerance=float(rng.uniform(*failure_tolerance)),
            data_volume=float(rng.uniform(*data_volume)),
            sense_slots_required=int(rng.integers(sense_slots_required[0],
                sense_slots_required[1] + 1)))

    uavs = {}
    for uid in range(n_uavs):
        start = Point3(float(starts[uid, 0]), float(starts[uid, 1]), float(heights[uid]))
        mine = ['t{}'.format(i) for i in range(uid, n_tasks, n_uavs)]

        # Nearest-first tour
        order = []
        here = start
        while mine:
            nxt = min(mine, key=lambda tid: (distance(here, tasks[tid].center), tid))
            mine.remove(nxt)
            order.append(nxt)
            here = tasks[nxt].center
        uavs[uid] = UavSpec(position=start, tasks=tuple(order))

    cfg = ScenarioConfig(bs_position=Point3(0., 0., bs_height), uavs=uavs, tasks=tasks,
        scheme=scheme, seed=seed, n_subchannels=n_subchannels, total_slots=total_slots,
        radio=radio, sensing=sensing, **kwargs)
    logger.info('Synthetic scenario: {} UAVs, {} tasks in a {:.0f} m cell (seed {})'.format(
        n_uavs, n_tasks, cell_radius, seed))
    return cfg
