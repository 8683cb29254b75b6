'''Seeded random streams and small-scale fading samplers.

Every stochastic draw in a simulation comes from one of the named streams
derived here from a single integer seed, so that a (scenario, seed) pair
determines every output of a run. Streams are spawned from a
`numpy.random.SeedSequence` in a fixed order; adding a new stream name at the
end of `STREAM_NAMES` leaves the existing streams unchanged.
'''
import math
import numpy as np

# Typing
from typing import Dict, Union

from .util import isint

STREAM_NAMES = ('channel', 'sensing', 'planner')


def streams(seed: int) -> Dict[str, np.random.Generator]:
    '''Make the independent named generators of one simulation

    Parameters
    ----------
    seed : int
        Seed of the simulation (>= 0)

    Returns
    -------
    dict (str -> numpy.random.Generator)
        One generator per name in `STREAM_NAMES`
    '''
    if not isint(seed):
        raise TypeError('`seed` ({}) must be an int'.format(type(seed)))
    if seed < 0:
        raise ValueError('`seed` ({}) must be >= 0'.format(seed))
    children = np.random.SeedSequence(int(seed)).spawn(len(STREAM_NAMES))
    return {name: np.random.default_rng(child) for name, child in zip(STREAM_NAMES, children)}

def db_to_linear(x: float) -> float:
    '''Convert decibels to a linear ratio (-inf dB maps to 0)
    '''
    if x == float('-inf'):
        return 0.
    return 10 ** (x / 10)

def rician_power(k_db: float, rng: np.random.Generator,
    size: Union[int, tuple, None]=None) -> Union[float, np.ndarray]:
    '''Sample the power |h|^2 of a unit-mean Rician fade.

    h = sqrt(K/(K+1)) + sqrt(1/(K+1)) * CN(0,1), so E[|h|^2] = 1. A K-factor
    of -inf dB gives Rayleigh fading (exponential power).

    Parameters
    ----------
    k_db : float
        Rician K-factor in dB
    rng : numpy.random.Generator
        Stream to draw from
    size : int, tuple, None
        Output shape. If None a float is returned

    Returns
    -------
    float, np.ndarray
    '''
    if math.isnan(k_db) or k_db == float('inf'):
        raise ValueError('`k_db` ({}) must be finite or -inf'.format(k_db))
    k = db_to_linear(k_db)
    los = math.sqrt(k / (k + 1))
    scatter = math.sqrt(1 / (k + 1))
    re = rng.standard_normal(size=size)
    im = rng.standard_normal(size=size)
    h_re = los + scatter * re / math.sqrt(2)
    h_im = scatter * im / math.sqrt(2)
    power = h_re ** 2 + h_im ** 2
    if size is None:
        return float(power)
    return power

def bernoulli(p: float, rng: np.random.Generator) -> bool:
    '''Draw a single Bernoulli(p) outcome
    '''
    if not 0 <= p <= 1:
        raise ValueError('`p` ({}) must be in [0, 1]'.format(p))
    return bool(rng.random() < p)
