'''Brute-force reference solutions for small instances.

These are correctness anchors for the allocation, power control and
trajectory planners. Rates and interference are recomputed here from the
raw gain arrays, and every search is a full scan in a fixed order, so the
results do not depend on any of the solvers they check.
'''
import json
import math
import numpy as np
from dataclasses import dataclass
from coopuav.logger import logger

# Typing
from typing import Any, Callable, Dict, Optional, Tuple

from .geometry import Point3
from .pylab.errors import BudgetExceededError
from .pylab.util import atomic_write

MAX_LINKS = 6
MAX_SUBCHANNELS = 4
MAX_CANDIDATES = 2 ** 24
MAX_GRID_LINKS = 3
CHUNK = 2 ** 15
MEMBERSHIP_TOLERANCE = 1e-9


@dataclass
class SmallInstance:
    '''A link system small enough for exhaustive search

    Parameters
    ----------
    direct : np.ndarray (n, K)
        Gain of each link on each subchannel
    cross : np.ndarray (n, n, K)
        cross[j, i, k]: gain from the transmitter of link j to the receiver
        of link i
    conflict : np.ndarray (n, n) bool
        Links that may not share a subchannel
    noise : float
        W per subchannel
    bandwidth : float
        Hz per subchannel
    r_min : float
        bit/s
    p_max : float
        W
    exempt : np.ndarray (n,) bool
        Links without a rate constraint
    u2n : np.ndarray (n,) bool
        Which links are U2N (informational)
    '''
    direct: np.ndarray
    cross: np.ndarray
    conflict: np.ndarray
    noise: float
    bandwidth: float
    r_min: float
    p_max: float
    exempt: Optional[np.ndarray] = None
    u2n: Optional[np.ndarray] = None

    def __post_init__(self):
        self.direct = np.asarray(self.direct, dtype=float)
        n, K = self.direct.shape
        if n > MAX_LINKS or K > MAX_SUBCHANNELS:
            raise ValueError('Instance ({} links x {} subchannels) exceeds {} x {}'.format(
                n, K, MAX_LINKS, MAX_SUBCHANNELS))
        self.cross = np.asarray(self.cross, dtype=float).reshape(n, n, K)
        self.conflict = np.asarray(self.conflict, dtype=bool).reshape(n, n)
        self.exempt = np.zeros(n, dtype=bool) if self.exempt is None else \
            np.asarray(self.exempt, dtype=bool).reshape(n)
        self.u2n = np.zeros(n, dtype=bool) if self.u2n is None else \
            np.asarray(self.u2n, dtype=bool).reshape(n)

    @property
    def n_links(self) -> int:
        return self.direct.shape[0]

    @property
    def n_subchannels(self) -> int:
        return self.direct.shape[1]

    @classmethod
    def from_system(cls, system: Any, exempt: np.ndarray=None) -> 'SmallInstance':
        '''Copy the arrays of a link system (anything with the same attributes)
        '''
        return cls(direct=system.direct.copy(), cross=system.cross.copy(),
            conflict=system.conflict.copy(), noise=system.noise, bandwidth=system.bandwidth,
            r_min=system.r_min, p_max=system.p_max, exempt=exempt,
            u2n=np.array([l.is_u2n for l in system.links], dtype=bool))

    def to_dict(self) -> Dict:
        return {'direct': self.direct.tolist(), 'cross': self.cross.tolist(),
            'conflict': self.conflict.tolist(), 'noise': self.noise,
            'bandwidth': self.bandwidth, 'r_min': self.r_min, 'p_max': self.p_max,
            'exempt': self.exempt.tolist(), 'u2n': self.u2n.tolist()}

    @classmethod
    def from_dict(cls, d: Dict) -> 'SmallInstance':
        return cls(**{k: d[k] for k in ('direct', 'cross', 'conflict', 'noise', 'bandwidth',
            'r_min', 'p_max')}, exempt=d.get('exempt'), u2n=d.get('u2n'))

    def save(self, path: str):
        def write(tmp):
            with open(tmp, 'w') as f:
                json.dump(self.to_dict(), f, indent=2)
        atomic_write(path, write)

    @classmethod
    def load(cls, path: str) -> 'SmallInstance':
        with open(path, 'r') as f:
            return cls.from_dict(json.load(f))


def random_instance(rng: np.random.Generator, n_links: int, n_subchannels: int,
    r_min: float=2e5, p_max: float=0.2, noise: float=7.2e-16, bandwidth: float=180e3,
    u2n_fraction: float=0.5) -> SmallInstance:
    '''Random instance with log-uniform gains. U2N links conflict with each
    other; each U2U link conflicts with one random U2N link (its relay)
    when there is one.
    '''
    n, K = n_links, n_subchannels
    direct = 10 ** rng.uniform(-13, -10, size=(n, K))
    cross = 10 ** rng.uniform(-15, -11, size=(n, n, K))
    for i in range(n):
        cross[i, i] = 0
    u2n = rng.uniform(size=n) < u2n_fraction
    conflict = np.zeros((n, n), dtype=bool)
    idx = np.flatnonzero(u2n)
    for i in idx:
        for j in idx:
            conflict[i, j] = i != j
    for i in np.flatnonzero(~u2n):
        if len(idx) > 0:
            j = idx[rng.integers(len(idx))]
            conflict[i, j] = conflict[j, i] = True
            cross[j, i] = 0
    return SmallInstance(direct=direct, cross=cross, conflict=conflict, noise=noise,
        bandwidth=bandwidth, r_min=r_min, p_max=p_max, u2n=u2n)


def _rates(x: np.ndarray, p: np.ndarray, inst: SmallInstance) -> np.ndarray:
    '''Rates of a batch of allocations and power vectors

    x : (c, n, K) {0, 1}
    p : (c, n)
    '''
    tx = x * p[:, :, None]
    interference = np.einsum('cjk,jik->cik', tx, inst.cross)
    # Own contribution is excluded through the zero diagonal of `cross`
    sinr = p[:, :, None] * inst.direct[None, :, :] / (inst.noise + interference)
    return np.sum(x * inst.bandwidth * np.log2(1 + sinr), axis=2)

def _feasible(x: np.ndarray, rates: np.ndarray, inst: SmallInstance) -> np.ndarray:
    ok = x.any(axis=2).all(axis=1)
    n = inst.n_links
    for i in range(n):
        for j in range(i + 1, n):
            if inst.conflict[i, j]:
                ok &= ~np.any(x[:, i, :] & x[:, j, :], axis=1)
    c = ~inst.exempt
    ok &= np.all(rates[:, c] >= inst.r_min, axis=1)
    return ok

def exhaustive_allocation(instance: SmallInstance, powers: np.ndarray=None,
    max_candidates: int=MAX_CANDIDATES) -> Tuple[Optional[np.ndarray], float]:
    '''Best allocation by enumeration of every binary (n, K) matrix.

    A candidate is feasible if every link holds a subchannel, no two
    conflicting links share one, and every non-exempt link meets `r_min`.
    Ties keep the first candidate in enumeration order.

    Parameters
    ----------
    instance : SmallInstance
    powers : np.ndarray, None
        Powers of the links. If None, `p_max` for all
    max_candidates : int

    Returns
    -------
    (np.ndarray bool (n, K) or None, float)
        The best allocation and its sum-rate; (None, -inf) if none is feasible

    Raises
    ------
    BudgetExceededError
        If there are more than `max_candidates` candidates
    '''
    n, K = instance.n_links, instance.n_subchannels
    n_vars = n * K
    total = 2 ** n_vars
    if total > max_candidates:
        raise BudgetExceededError('{} candidates exceed the budget of {}'.format(total,
            max_candidates))
    if powers is None:
        powers = np.full(n, instance.p_max)
    powers = np.asarray(powers, dtype=float)
    shifts = np.arange(n_vars, dtype=np.int64)

    best_x, best_value = None, -math.inf
    for start in range(0, total, CHUNK):
        codes = np.arange(start, min(start + CHUNK, total), dtype=np.int64)
        x = ((codes[:, None] >> shifts[None, :]) & 1).astype(bool).reshape(-1, n, K)
        p = np.broadcast_to(powers, (len(codes), n))
        rates = _rates(x.astype(float), p, instance)
        ok = _feasible(x, rates, instance)
        if not ok.any():
            continue
        values = np.where(ok, rates.sum(axis=1), -np.inf)
        i = int(np.argmax(values))
        if values[i] > best_value:
            best_value = float(values[i])
            best_x = x[i].copy()
    return best_x, best_value

def grid_power_search(instance: SmallInstance, allocation: np.ndarray, resolution: float,
    max_links: int=MAX_GRID_LINKS) -> Tuple[Optional[np.ndarray], float]:
    '''Best power vector on the grid {0, res, 2 res, ..., p_max}^n.

    Links without a subchannel keep zero power. Only vectors that meet
    `r_min` on every non-exempt link with a subchannel are kept. Ties keep
    the first vector in scan order.

    Returns
    -------
    (np.ndarray or None, float)
        Powers and sum-rate; (None, -inf) if no grid vector is feasible

    Raises
    ------
    BudgetExceededError
        If more than `max_links` links hold a subchannel
    '''
    x = np.asarray(allocation, dtype=bool)
    n = instance.n_links
    active = np.flatnonzero(x.any(axis=1))
    if len(active) > max_links:
        raise BudgetExceededError('{} links exceed the grid budget of {}'.format(len(active),
            max_links))
    if not resolution > 0:
        raise ValueError('`resolution` ({}) must be > 0'.format(resolution))
    steps = int(round(instance.p_max / resolution))
    levels = np.linspace(0, instance.p_max, max(steps, 1) + 1)
    mesh = np.meshgrid(*([levels] * len(active)), indexing='ij')
    grid = np.zeros((mesh[0].size if len(active) > 0 else 1, n))
    for col, m in zip(active, mesh):
        grid[:, col] = m.ravel()

    xb = np.broadcast_to(x.astype(float), (len(grid),) + x.shape)
    rates = _rates(xb, grid, instance)
    c = np.zeros(n, dtype=bool)
    c[active] = True
    c &= ~instance.exempt
    ok = np.all(rates[:, c] >= instance.r_min, axis=1)
    if not ok.any():
        return None, -math.inf
    values = np.where(ok, rates.sum(axis=1), -np.inf)
    i = int(np.argmax(values))
    return grid[i].copy(), float(values[i])


@dataclass(frozen=True)
class Box:
    '''Axis-aligned box region for `grid_point_search`
    '''
    low: Tuple[float, float, float]
    high: Tuple[float, float, float]

    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.low, dtype=float), np.asarray(self.high, dtype=float)

    def contains_array(self, pts: np.ndarray) -> np.ndarray:
        low, high = self.bounding_box()
        return np.all((pts >= low - MEMBERSHIP_TOLERANCE) & (pts <= high + MEMBERSHIP_TOLERANCE),
            axis=1)


def _members(region: Any, pts: np.ndarray) -> np.ndarray:
    if hasattr(region, 'contains_array'):
        return region.contains_array(pts)
    # Spherical crown
    c = region.center.asarray()
    inside = np.sqrt(np.sum((pts - c) ** 2, axis=1)) <= region.radius + MEMBERSHIP_TOLERANCE
    return inside & (pts[:, 2] >= region.min_altitude - MEMBERSHIP_TOLERANCE)

def grid_point_search(region: Any, objective: Callable[[np.ndarray], np.ndarray],
    resolution: float) -> Point3:
    '''Best member of a regular grid over the bounding box of `region`.

    The grid starts at the low corner of the box with spacing `resolution`
    on each axis; the scan order runs over x, then y, then z fastest. Ties
    keep the first point in scan order.

    Parameters
    ----------
    region : SphericalCrown, Box
        Anything with `bounding_box()` that is a crown or has `contains_array`
    objective : callable
        Maps an (N, 3) array to N values
    resolution : float
        Grid spacing, m

    Raises
    ------
    ValueError
        If no grid point lies in the region
    '''
    if not resolution > 0:
        raise ValueError('`resolution` ({}) must be > 0'.format(resolution))
    low, high = region.bounding_box()
    axes = [np.arange(low[d], high[d] + resolution * 1e-9, resolution) for d in range(3)]
    yz = np.stack(np.meshgrid(axes[1], axes[2], indexing='ij'), axis=-1).reshape(-1, 2)

    best, best_value = None, -math.inf
    for x in axes[0]:
        pts = np.column_stack([np.full(len(yz), x), yz])
        ok = _members(region, pts)
        if not ok.any():
            continue
        values = np.where(ok, np.asarray(objective(pts), dtype=float), -np.inf)
        i = int(np.argmax(values))
        if best is None or values[i] > best_value:
            best, best_value = pts[i], values[i]
    if best is None:
        raise ValueError('No grid point of resolution {} lies in the region'.format(resolution))
    logger.debug('Grid search: best {} at {}'.format(best_value, best))
    return Point3.from_array(best)
