'''U2N and U2U channel models, SINR and Shannon rate.

U2N (UAV to base station) links follow a probabilistic LoS/NLoS path loss
model whose LoS probability is a sigmoid of the elevation angle, with Rician
small-scale fading in LoS and Rayleigh fading in NLoS. U2U links are
dominated by their LoS component and use a deterministic power law.

Optimizers work on expected gains (`GainTable.expected`); the transmission
step draws a LoS state and a fade per slot (`GainTable.realize`).
'''
import math
import numpy as np
from dataclasses import dataclass

# Typing
from typing import Dict, Iterable, Iterator, Tuple, Union, Any, Hashable

from .geometry import Point3, distance, elevation_angle
from .names import BS
from .pylab import random as plrandom
from .pylab.errors import ZeroDistanceError, MissingGainError, UndefinedAngleError

# Path loss reference distance (m)
REFERENCE_DISTANCE = 1.


@dataclass(frozen=True)
class RadioParams:
    '''Radio constants of the cell

    Parameters
    ----------
    bandwidth_per_subchannel : float
        Hz
    noise_psd : float
        Noise power spectral density, dBm/Hz
    los_sigmoid_a, los_sigmoid_b : float
        Environment parameters of the LoS probability sigmoid
    pathloss_exponent_los, pathloss_exponent_nlos : float
        U2N path loss exponents
    pathloss_intercept_los_db, pathloss_intercept_nlos_db : float
        U2N path loss at 1 m, dB
    rician_k_db : float
        Rician K-factor of the U2N LoS state, dB
    u2u_pathloss_exponent : float
    u2u_intercept_db : float
        U2U path loss at 1 m, dB
    '''
    bandwidth_per_subchannel: float = 180e3
    noise_psd: float = -174.
    los_sigmoid_a: float = 9.61
    los_sigmoid_b: float = 0.16
    pathloss_exponent_los: float = 2.5
    pathloss_exponent_nlos: float = 3.5
    pathloss_intercept_los_db: float = 40.
    pathloss_intercept_nlos_db: float = 60.
    rician_k_db: float = 10.
    u2u_pathloss_exponent: float = 2.
    u2u_intercept_db: float = 40.

    def __post_init__(self):
        for k, v in vars(self).items():
            if k == 'rician_k_db' and v == float('-inf'):
                continue
            if not math.isfinite(v):
                raise ValueError('`{}` ({}) must be finite'.format(k, v))
        if self.bandwidth_per_subchannel <= 0:
            raise ValueError('`bandwidth_per_subchannel` ({}) must be > 0'.format(
                self.bandwidth_per_subchannel))
        if self.pathloss_exponent_nlos < self.pathloss_exponent_los:
            raise ValueError('`pathloss_exponent_nlos` ({}) must be >= `pathloss_exponent_los` ' \
                '({})'.format(self.pathloss_exponent_nlos, self.pathloss_exponent_los))

    @property
    def noise_power(self) -> float:
        '''Noise power over one subchannel, W
        '''
        return 10 ** ((self.noise_psd - 30) / 10) * self.bandwidth_per_subchannel


def _power_law_gain(d: Union[float, np.ndarray], intercept_db: float,
    exponent: float) -> Union[float, np.ndarray]:
    return 10 ** (-(intercept_db + 10 * exponent * np.log10(d)) / 10)

def _check_distance(d: float, a: Point3, b: Point3):
    if d < REFERENCE_DISTANCE:
        raise ZeroDistanceError('Radios {} and {} are {:.3f} m apart, below the {} m ' \
            'reference distance'.format(a, b, d, REFERENCE_DISTANCE))

def los_probability(elevation: float, params: RadioParams) -> float:
    '''Probability of a LoS U2N link at `elevation` degrees

    1 / (1 + a * exp(-b * (elevation - a)))
    '''
    if not 0 < elevation <= 90:
        raise ValueError('`elevation` ({}) must be in (0, 90]'.format(elevation))
    a = params.los_sigmoid_a
    b = params.los_sigmoid_b
    return 1 / (1 + a * math.exp(-b * (elevation - a)))

def u2n_state_gains(uav: Point3, bs: Point3, params: RadioParams) -> Tuple[float, float, float]:
    '''LoS probability, LoS gain and NLoS gain of the U2N link of `uav`
    '''
    d = distance(uav, bs)
    _check_distance(d, uav, bs)
    p_los = los_probability(elevation_angle(bs, uav), params)
    g_los = _power_law_gain(d, params.pathloss_intercept_los_db, params.pathloss_exponent_los)
    g_nlos = _power_law_gain(d, params.pathloss_intercept_nlos_db, params.pathloss_exponent_nlos)
    return p_los, float(g_los), float(g_nlos)

def u2n_expected_gain(uav: Point3, bs: Point3, params: RadioParams) -> float:
    '''Expected linear U2N power gain, averaged over the LoS state in the
    linear domain.

    Raises
    ------
    ZeroDistanceError
        If the UAV is closer than 1 m to the base station
    UndefinedAngleError
        If the UAV is not above the base station
    '''
    p_los, g_los, g_nlos = u2n_state_gains(uav, bs, params)
    return p_los * g_los + (1 - p_los) * g_nlos

def u2n_expected_gain_array(points: np.ndarray, bs: Point3, params: RadioParams) -> np.ndarray:
    '''Vectorized `u2n_expected_gain` over an (N, 3) array. Points closer
    than 1 m or not above the base station get a gain of 0.
    '''
    points = np.atleast_2d(points)
    b = bs.asarray()
    diff = points - b
    d = np.linalg.norm(diff, axis=1)
    dz = diff[:, 2]
    horiz = np.hypot(diff[:, 0], diff[:, 1])
    valid = (d >= REFERENCE_DISTANCE) & (dz > 0)
    theta = np.degrees(np.arctan2(dz, horiz))
    a = params.los_sigmoid_a
    p_los = 1 / (1 + a * np.exp(-params.los_sigmoid_b * (theta - a)))
    dd = np.where(valid, d, REFERENCE_DISTANCE)
    g_los = _power_law_gain(dd, params.pathloss_intercept_los_db, params.pathloss_exponent_los)
    g_nlos = _power_law_gain(dd, params.pathloss_intercept_nlos_db, params.pathloss_exponent_nlos)
    return np.where(valid, p_los * g_los + (1 - p_los) * g_nlos, 0.)

def sample_rician(k_db: float, rng_stream: np.random.Generator) -> float:
    '''Draw one unit-mean Rician power fade. `k_db = -inf` gives Rayleigh.
    '''
    return plrandom.rician_power(k_db, rng_stream)

def u2u_gain(tx: Point3, rx: Point3, params: RadioParams) -> float:
    '''Deterministic LoS power-law gain between two UAVs

    Raises
    ------
    ZeroDistanceError
        If the UAVs are closer than 1 m
    '''
    d = distance(tx, rx)
    _check_distance(d, tx, rx)
    return float(_power_law_gain(d, params.u2u_intercept_db, params.u2u_pathloss_exponent))

def snr(gain: float, power: float, params: RadioParams) -> float:
    '''Interference-free SNR over one subchannel
    '''
    return power * gain / params.noise_power

def sinr(link: Any, assignments: Iterable[Any], gains: 'GainTable', params: RadioParams,
    subchannel: int=None) -> float:
    '''SINR of `link` on one of its subchannels.

    `link` and the members of `assignments` are assignment records exposing
    `uav_id`, `receiver`, `subchannels` and `tx_power`. Every other
    assignment holding the same subchannel interferes at the receiver of
    `link`.

    Parameters
    ----------
    link : Assignment
        The link of interest
    assignments : iterable of Assignment
        All assignments of the slot (`link` may be included)
    gains : GainTable
    params : RadioParams
    subchannel : int, None
        Subchannel to evaluate. If None, the lowest subchannel of the link

    Raises
    ------
    MissingGainError
        If the gain table lacks a pair needed for the computation
    '''
    if len(link.subchannels) == 0:
        raise ValueError('Link of UAV {} holds no subchannel'.format(link.uav_id))
    if subchannel is None:
        subchannel = min(link.subchannels)
    elif subchannel not in link.subchannels:
        raise ValueError('Link of UAV {} does not hold subchannel {}'.format(
            link.uav_id, subchannel))
    signal = link.tx_power * gains.get(link.uav_id, link.receiver, subchannel)
    interference = 0.
    for other in assignments:
        if other.uav_id == link.uav_id or subchannel not in other.subchannels:
            continue
        interference += other.tx_power * gains.get(other.uav_id, link.receiver, subchannel)
    return signal / (interference + params.noise_power)

def rate(sinr: Union[float, np.ndarray], bandwidth: float) -> Union[float, np.ndarray]:
    '''Shannon rate B * log2(1 + sinr), bits/s
    '''
    if np.any(np.asarray(sinr) < 0):
        raise ValueError('`sinr` ({}) must be >= 0'.format(sinr))
    return bandwidth * np.log2(1 + sinr)


class GainTable:
    '''Linear power gains of one slot, keyed by (transmitter, receiver,
    subchannel). Transmitters are UAV ids; receivers are UAV ids or
    `names.BS`.

    Parameters
    ----------
    n_subchannels : int
    positions : dict (int -> Point3)
        UAV positions the table was computed from
    bs : Point3
    '''
    def __init__(self, n_subchannels: int, positions: Dict[int, Point3]=None, bs: Point3=None):
        if n_subchannels <= 0:
            raise ValueError('`n_subchannels` ({}) must be > 0'.format(n_subchannels))
        self.n_subchannels = n_subchannels
        self.positions = dict(positions or {})
        self.bs = bs
        self._gains = {}

    def __len__(self) -> int:
        return len(self._gains)

    def __contains__(self, key: Tuple[Hashable, Hashable, int]) -> bool:
        return key in self._gains

    def __iter__(self) -> Iterator[Tuple[Hashable, Hashable, int]]:
        return iter(self._gains)

    def set(self, tx: int, rx: Hashable, subchannel: int, gain: float):
        if not gain > 0:
            raise ValueError('Gain ({}, {}, {}) = {} must be > 0'.format(tx, rx, subchannel, gain))
        if not 0 <= subchannel < self.n_subchannels:
            raise ValueError('`subchannel` ({}) out of range'.format(subchannel))
        self._gains[(tx, rx, subchannel)] = float(gain)

    def get(self, tx: int, rx: Hashable, subchannel: int) -> float:
        try:
            return self._gains[(tx, rx, subchannel)]
        except KeyError:
            raise MissingGainError('No gain for transmitter {} -> receiver {} on ' \
                'subchannel {}'.format(tx, rx, subchannel))

    def pairs(self) -> Iterator[Tuple[int, Hashable]]:
        '''Distinct (transmitter, receiver) pairs of the table, in sorted order
        '''
        return iter(sorted({(tx, rx) for tx, rx, _ in self._gains}, key=_pair_key))

    @classmethod
    def expected(cls, pairs: Iterable[Tuple[int, Hashable]], positions: Dict[int, Point3],
        bs: Point3, params: RadioParams, n_subchannels: int) -> 'GainTable':
        '''Expected gains of the given (transmitter, receiver) pairs on every
        subchannel. Receivers equal to `names.BS` use the U2N model, the
        others the U2U model. UAVs may share a waypoint: U2U pairs closer
        than `REFERENCE_DISTANCE` get the gain at `REFERENCE_DISTANCE`.
        '''
        table = cls(n_subchannels=n_subchannels, positions=positions, bs=bs)
        for tx, rx in sorted(set(pairs), key=_pair_key):
            if rx == BS:
                g = u2n_expected_gain(positions[tx], bs, params)
            elif distance(positions[tx], positions[rx]) < REFERENCE_DISTANCE:
                g = float(_power_law_gain(REFERENCE_DISTANCE, params.u2u_intercept_db,
                    params.u2u_pathloss_exponent))
            else:
                g = u2u_gain(positions[tx], positions[rx], params)
            for k in range(n_subchannels):
                table.set(tx, rx, k, g)
        return table

    def realize(self, params: RadioParams, rng_stream: np.random.Generator) -> 'GainTable':
        '''Draw the realized gains of the slot.

        Each U2N pair draws one LoS state for the slot and one fade per
        subchannel (Rician in LoS, Rayleigh in NLoS). U2U pairs are
        deterministic. Draws follow the sorted pair order, so the result
        depends only on the table content and the stream state.
        '''
        out = GainTable(n_subchannels=self.n_subchannels, positions=self.positions, bs=self.bs)
        for tx, rx in self.pairs():
            if rx == BS:
                p_los, g_los, g_nlos = u2n_state_gains(self.positions[tx], self.bs, params)
                los = plrandom.bernoulli(p_los, rng_stream)
                base = g_los if los else g_nlos
                k_db = params.rician_k_db if los else float('-inf')
                for k in range(self.n_subchannels):
                    fade = plrandom.rician_power(k_db, rng_stream)
                    # Exponential draws can underflow to exactly 0
                    out.set(tx, rx, k, base * max(fade, 1e-300))
            else:
                for k in range(self.n_subchannels):
                    out.set(tx, rx, k, self.get(tx, rx, k))
        return out


def _pair_key(pair: Tuple[int, Hashable]) -> Tuple[int, int, str]:
    tx, rx = pair
    if rx == BS:
        return (tx, -1, '')
    return (tx, 0, str(rx).zfill(12))
