'''Radio resource management: subchannel allocation and power control of the
links of one slot, and the loop that couples them with speed control.

The links of a slot form a `LinkSystem`: expected direct gains, cross gains
between every transmitter and every receiver, and a conflict matrix. Two
links conflict (may not share a subchannel) when both are U2N links, or when
they share a UAV (a relay receives on its U2U link and transmits on its own
U2N link). U2U links otherwise underlay anything.

Allocation is solved by branch and bound over the binary variables
x[i, k] (link i holds subchannel k), starting from a greedy incumbent. Power
control writes each rate as a difference of concave functions and iterates
on the linearization of the subtracted term. `optimize_slot` alternates
speed control, allocation and power control until the sum-rate converges.
'''
import heapq
import itertools
import collections
import numpy as np
import numba
from dataclasses import dataclass, field
from coopuav.logger import logger

# Typing
from typing import Any, Dict, Hashable, List, Optional, Sequence, Set, Tuple

from .geometry import Point3, Segment, advance
from .channel import GainTable, RadioParams
from .names import BS, MODES
from .trajectory import control_speed
from .pylab.errors import InfeasibleStartError, DeadlineQoSConflictError

DEFAULT_NODE_BUDGET = 1000000

# Power control
DC_TOLERANCE = 1e-4
DC_MAX_ITERATIONS = 100
INNER_MAX_ITERATIONS = 200
ARMIJO = 1e-4
MULTI_START_LINKS = 3
N_RANDOM_POWER_STARTS = 3
SOFTMIN_TEMPERATURE = 50.

# Outer loop
SLOT_TOLERANCE = 1e-3
SLOT_MAX_ROUNDS = 20

FREE = -1


@dataclass(frozen=True)
class Link:
    '''A transmission of one slot: `uav_id` sends to `receiver` (a relay
    UAV id or `names.BS`)
    '''
    uav_id: int
    receiver: Hashable
    mode: str

    @property
    def is_u2n(self) -> bool:
        return self.mode == MODES.U2N

    def nodes(self) -> Set[Hashable]:
        '''UAVs the link occupies'''
        return {self.uav_id} if self.receiver == BS else {self.uav_id, self.receiver}


def required_pairs(links: Sequence[Link]) -> List[Tuple[int, Hashable]]:
    '''(transmitter, receiver) pairs a gain table needs for `links`: each
    link's own pair and every transmitter toward every other receiver
    '''
    pairs = set()
    for li in links:
        for lj in links:
            if lj.uav_id != li.receiver:
                pairs.add((lj.uav_id, li.receiver))
    return sorted(pairs, key=lambda p: (p[0], str(p[1])))


@numba.jit(nopython=True, cache=True)
def _link_rates(x, p, direct, cross, noise, bandwidth):
    n, K = x.shape
    out = np.zeros(n)
    for i in range(n):
        for k in range(K):
            if x[i, k] > 0:
                d = noise
                for j in range(n):
                    if j != i and x[j, k] > 0:
                        d += p[j] * cross[j, i, k]
                out[i] += bandwidth * np.log2(1. + p[i] * direct[i, k] / d)
    return out

@numba.jit(nopython=True, cache=True)
def _dc_terms(x, p, direct, cross, noise, bandwidth):
    '''Concave parts of the rates and their gradients.

    rate_i = f_i - h_i with f_i = sum_k B log2(N + I_ik + p_i G_ik) and
    h_i = sum_k B log2(N + I_ik). grad_f[i, j] is d f_i / d p_j.
    '''
    n, K = x.shape
    f = np.zeros(n)
    h = np.zeros(n)
    grad_f = np.zeros((n, n))
    grad_h = np.zeros((n, n))
    c = bandwidth / np.log(2.)
    for i in range(n):
        for k in range(K):
            if x[i, k] > 0:
                d = noise
                for j in range(n):
                    if j != i and x[j, k] > 0:
                        d += p[j] * cross[j, i, k]
                a = d + p[i] * direct[i, k]
                f[i] += bandwidth * np.log2(a)
                h[i] += bandwidth * np.log2(d)
                grad_f[i, i] += c * direct[i, k] / a
                for j in range(n):
                    if j != i and x[j, k] > 0:
                        grad_f[i, j] += c * cross[j, i, k] / a
                        grad_h[i, j] += c * cross[j, i, k] / d
    return f, h, grad_f, grad_h


class LinkSystem:
    '''Expected-gain model of the links of one slot

    Parameters
    ----------
    links : list(Link)
    direct : np.ndarray (n, K)
        Gain of each link on each subchannel
    cross : np.ndarray (n, n, K)
        cross[j, i, k] is the gain from the transmitter of link j to the
        receiver of link i on subchannel k. Zero on the diagonal and where
        the transmitter of j is the receiver of i.
    conflict : np.ndarray (n, n) bool
        Links that may not share a subchannel
    noise : float
        Noise power per subchannel, W
    bandwidth : float
        Hz per subchannel
    r_min : float
        Minimum rate of a link, bit/s
    p_max : float
        Maximum transmit power per subchannel, W
    '''
    def __init__(self, links: Sequence[Link], direct: np.ndarray, cross: np.ndarray,
        conflict: np.ndarray, noise: float, bandwidth: float, r_min: float, p_max: float):
        direct = np.asarray(direct, dtype=float)
        cross = np.asarray(cross, dtype=float)
        conflict = np.asarray(conflict, dtype=bool)
        n = len(links)
        if direct.ndim != 2 or direct.shape[0] != n:
            raise ValueError('`direct` ({}) must have shape (n_links, n_subchannels)'.format(
                direct.shape))
        if cross.shape != (n, n, direct.shape[1]):
            raise ValueError('`cross` ({}) must have shape {}'.format(cross.shape,
                (n, n, direct.shape[1])))
        if conflict.shape != (n, n):
            raise ValueError('`conflict` ({}) must have shape {}'.format(conflict.shape, (n, n)))
        if not (noise > 0 and bandwidth > 0 and p_max > 0 and r_min >= 0):
            raise ValueError('`noise`, `bandwidth` and `p_max` must be > 0 and `r_min` >= 0')
        self.links = list(links)
        self.direct = direct
        self.cross = cross
        self.conflict = conflict
        self.noise = float(noise)
        self.bandwidth = float(bandwidth)
        self.r_min = float(r_min)
        self.p_max = float(p_max)

    def __len__(self) -> int:
        return len(self.links)

    @property
    def n_subchannels(self) -> int:
        return self.direct.shape[1]

    @classmethod
    def from_gains(cls, links: Sequence[Link], gains: GainTable, params: RadioParams,
        r_min: float, p_max: float) -> 'LinkSystem':
        '''Build the system from a gain table covering `required_pairs(links)`
        '''
        n = len(links)
        K = gains.n_subchannels
        direct = np.zeros((n, K))
        cross = np.zeros((n, n, K))
        conflict = np.zeros((n, n), dtype=bool)
        for i, li in enumerate(links):
            for k in range(K):
                direct[i, k] = gains.get(li.uav_id, li.receiver, k)
            for j, lj in enumerate(links):
                if j == i:
                    continue
                if (li.is_u2n and lj.is_u2n) or (li.nodes() & lj.nodes()):
                    conflict[i, j] = True
                if lj.uav_id == li.receiver:
                    continue
                for k in range(K):
                    cross[j, i, k] = gains.get(lj.uav_id, li.receiver, k)
        return cls(links, direct, cross, conflict, noise=params.noise_power,
            bandwidth=params.bandwidth_per_subchannel, r_min=r_min, p_max=p_max)

    @classmethod
    def from_instance(cls, instance: Any) -> 'LinkSystem':
        '''Build the system from raw arrays (an `oracle.SmallInstance`).

        Link `i` transmits from UAV `i`. U2U links get a placeholder
        receiver `-1 - i`; the conflicts come from the instance.
        '''
        links = [Link(i, BS, MODES.U2N) if u else Link(i, -1 - i, MODES.U2U)
            for i, u in enumerate(instance.u2n)]
        return cls(links, instance.direct, instance.cross, instance.conflict,
            noise=instance.noise, bandwidth=instance.bandwidth, r_min=instance.r_min,
            p_max=instance.p_max)

    def subsystem(self, idxs: Sequence[int]) -> 'LinkSystem':
        idxs = np.asarray(idxs, dtype=int)
        return LinkSystem([self.links[i] for i in idxs], self.direct[idxs],
            self.cross[np.ix_(idxs, idxs)], self.conflict[np.ix_(idxs, idxs)],
            noise=self.noise, bandwidth=self.bandwidth, r_min=self.r_min, p_max=self.p_max)

    def rates(self, x: np.ndarray, powers: np.ndarray) -> np.ndarray:
        '''Expected rate of every link under allocation `x` and `powers`
        '''
        return _link_rates(np.asarray(x, dtype=float), np.asarray(powers, dtype=float),
            self.direct, self.cross, self.noise, self.bandwidth)

    def sum_rate(self, x: np.ndarray, powers: np.ndarray) -> float:
        return float(np.sum(self.rates(x, powers)))

    def interference_free_rates(self, powers: np.ndarray) -> np.ndarray:
        '''Rate of each (link, subchannel) variable without interference, (n, K)
        '''
        powers = np.asarray(powers, dtype=float)
        return self.bandwidth * np.log2(1 + powers[:, None] * self.direct / self.noise)

    def has_conflict(self, x: np.ndarray) -> bool:
        x = np.asarray(x, dtype=bool)
        for k in range(self.n_subchannels):
            on = np.flatnonzero(x[:, k])
            if len(on) > 1 and self.conflict[np.ix_(on, on)].any():
                return True
        return False

    def is_feasible(self, x: np.ndarray, powers: np.ndarray, exempt: np.ndarray) -> bool:
        '''No conflicts, every link holds a subchannel and every non-exempt
        link meets `r_min`
        '''
        x = np.asarray(x, dtype=bool)
        if not x.any(axis=1).all() or self.has_conflict(x):
            return False
        r = self.rates(x, powers)
        return bool(np.all(r[~np.asarray(exempt, dtype=bool)] >= self.r_min))


@dataclass
class Allocation:
    '''Subchannel allocation of a `LinkSystem`

    Parameters
    ----------
    matrix : np.ndarray (n, K) bool
        matrix[i, k] is True if link i holds subchannel k
    exempt : np.ndarray (n,) bool
        Links excused from `r_min` (their QoS violation is flagged)
    deferred : np.ndarray (n,) bool
        Links not served this slot
    suboptimal : bool
        True if the search stopped at its node budget
    nodes : int
        Search nodes created
    '''
    matrix: np.ndarray
    exempt: np.ndarray
    deferred: np.ndarray
    suboptimal: bool = False
    nodes: int = 0

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=bool)
        n = self.matrix.shape[0]
        self.exempt = np.asarray(self.exempt, dtype=bool).reshape(n)
        self.deferred = np.asarray(self.deferred, dtype=bool).reshape(n)

    def subchannels(self, i: int) -> Tuple[int, ...]:
        return tuple(int(k) for k in np.flatnonzero(self.matrix[i]))

    def copy(self) -> 'Allocation':
        return Allocation(self.matrix.copy(), self.exempt.copy(), self.deferred.copy(),
            self.suboptimal, self.nodes)


class PowerVector:
    '''Transmit power per subchannel of every link, W

    Parameters
    ----------
    values : np.ndarray
    p_max : float
    iterations : int
        Outer DC iterations that produced the vector
    history : list(float)
        Sum-rate after each accepted DC iterate
    '''
    def __init__(self, values: np.ndarray, p_max: float, iterations: int=0,
        history: Sequence[float]=None):
        values = np.asarray(values, dtype=float)
        if np.any(values < 0) or np.any(values > p_max * (1 + 1e-12)):
            raise ValueError('`values` ({}) must be in [0, {}]'.format(values, p_max))
        self.values = np.clip(values, 0, p_max)
        self.p_max = float(p_max)
        self.iterations = int(iterations)
        self.history = list(history or [])

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __str__(self):
        return 'PowerVector({})'.format(np.array2string(self.values, precision=4))

    @classmethod
    def full(cls, n: int, p_max: float) -> 'PowerVector':
        return cls(np.full(n, p_max), p_max)


# ------------------------------------------------------------------------------
# Allocation
# ------------------------------------------------------------------------------
def link_priority(system: LinkSystem, powers: np.ndarray) -> np.ndarray:
    '''Neediness of each link: `r_min` over its best single-subchannel rate.
    Larger is needier.
    '''
    best = system.interference_free_rates(powers).max(axis=1)
    with np.errstate(divide='ignore', invalid='ignore'):
        prio = np.where(best > 0, system.r_min / best, np.inf)
    return np.where(system.r_min == 0, 0., prio)

def initial_allocation(system: LinkSystem, powers: np.ndarray=None,
    deferred: np.ndarray=None) -> Allocation:
    '''Greedy allocation in decreasing priority.

    Each link takes its best subchannels, skipping those that conflict with
    an earlier link or that would push an earlier link that meets `r_min`
    below it, until it meets `r_min`. A link that ends below `r_min` is
    exempted (flagged); a link that gets no subchannel is deferred.

    Parameters
    ----------
    system : LinkSystem
    powers : np.ndarray, None
        If None, `p_max` for all
    deferred : np.ndarray (n,) bool, None
        Links that are not served this slot regardless
    '''
    n, K = len(system), system.n_subchannels
    if powers is None:
        powers = np.full(n, system.p_max)
    powers = np.asarray(powers, dtype=float)
    skip = np.zeros(n, dtype=bool) if deferred is None else np.asarray(deferred, dtype=bool)
    x = np.zeros((n, K), dtype=bool)
    exempt = np.zeros(n, dtype=bool)
    placed = np.zeros(n, dtype=bool)
    prio = link_priority(system, powers)
    order = sorted(np.flatnonzero(~skip), key=lambda i: (-prio[i], i))

    for i in order:
        channels = sorted(range(K), key=lambda k: (-system.direct[i, k], k))
        for k in channels:
            if x[i].any() and system.rates(x, powers)[i] >= system.r_min:
                break
            holders = np.flatnonzero(x[:, k])
            if np.any(system.conflict[i, holders]):
                continue
            x[i, k] = True
            r = system.rates(x, powers)
            guarded = placed & ~exempt
            if np.any(r[guarded] < system.r_min):
                x[i, k] = False
        placed[i] = True
        if not x[i].any():
            continue
        if system.rates(x, powers)[i] < system.r_min:
            exempt[i] = True
    deferred = ~x.any(axis=1)
    exempt &= ~deferred
    if deferred.any() or exempt.any():
        logger.debug('Greedy allocation: {} deferred, {} below r_min'.format(
            int(deferred.sum()), int(exempt.sum())))
    return Allocation(x, exempt, deferred)

def round_robin_allocation(system: LinkSystem, slot: int) -> Allocation:
    '''Orthogonal allocation: subchannel k goes to link (k + slot) mod n
    '''
    n, K = len(system), system.n_subchannels
    x = np.zeros((n, K), dtype=bool)
    if n > 0:
        for k in range(K):
            x[(k + slot) % n, k] = True
    deferred = ~x.any(axis=1)
    return Allocation(x, np.zeros(n, dtype=bool), deferred)


class SearchTreeLog:
    '''Statistics of one branch-and-bound search
    '''
    def __init__(self):
        self.nodes = 0
        self.pruned = collections.Counter()
        self.forced = collections.Counter()
        self.incumbent_updates = []
        self.suboptimal = False

    def to_dict(self) -> Dict:
        return {
            'nodes': self.nodes,
            'pruned': dict(sorted(self.pruned.items())),
            'forced': dict(sorted(self.forced.items())),
            'incumbent_updates': [{'node': int(n), 'objective': float(v)}
                for n, v in self.incumbent_updates],
            'suboptimal': self.suboptimal}


class _BranchAndBound:
    '''Best-bound-first search over x[i, k] in {0, 1, free}
    '''
    def __init__(self, system: LinkSystem, powers: np.ndarray, exempt: np.ndarray,
        node_budget: int, log: SearchTreeLog):
        self.system = system
        self.powers = powers
        self.exempt = exempt
        self.node_budget = node_budget
        self.log = log
        self.r0 = system.interference_free_rates(powers)
        self.conflict = system.conflict.astype(np.int64)
        self.best = -np.inf
        self.best_x = None
        self.heap = []

    def offer(self, x: np.ndarray, node_id: int):
        if not x.any(axis=1).all():
            return
        r = self.system.rates(x, self.powers)
        if np.any(r[~self.exempt] < self.system.r_min):
            return
        value = float(np.sum(r))
        if value > self.best:
            self.best = value
            self.best_x = x.copy()
            self.log.incumbent_updates.append((node_id, value))

    def propagate(self, state: np.ndarray) -> Optional[str]:
        '''Fix variables with a single feasible value. Returns the prune
        reason if the node is infeasible.
        '''
        r0 = self.r0
        r_min = self.system.r_min
        while True:
            ones = (state == 1).astype(np.int64)
            if np.any((self.conflict @ ones) * ones > 0):
                return 'conflict'
            blocked = (state == FREE) & ((self.conflict @ ones) > 0)
            if blocked.any():
                state[blocked] = 0
                self.log.forced['conflict'] += int(blocked.sum())
                continue

            possible = state != 0
            if not possible.any(axis=1).all():
                return 'empty_link'
            best_case = np.sum(r0 * possible, axis=1)
            if np.any(best_case[~self.exempt] < r_min):
                return 'qos'

            free = state == FREE
            only = free & (possible.sum(axis=1) == 1)[:, None] & (ones.sum(axis=1) == 0)[:, None]
            needed = free & ((best_case[:, None] - r0) < r_min) & ~self.exempt[:, None] & \
                (r_min > 0)
            force = only | needed
            if force.any():
                state[force] = 1
                self.log.forced['only_channel'] += int(only.sum())
                self.log.forced['qos'] += int((needed & ~only).sum())
                continue
            return None

    def push(self, state: np.ndarray):
        node_id = self.log.nodes
        self.log.nodes += 1
        reason = self.propagate(state)
        if reason is not None:
            self.log.pruned[reason] += 1
            return
        bound = float(np.sum(self.r0 * (state != 0)))
        if bound <= self.best:
            self.log.pruned['bound'] += 1
            return
        self.offer(state == 1, node_id)
        if not np.any(state == FREE):
            return
        heapq.heappush(self.heap, (-bound, node_id, state))

    def solve(self, incumbent: np.ndarray) -> np.ndarray:
        self.offer(np.asarray(incumbent, dtype=bool), -1)
        n, K = self.r0.shape
        self.push(np.full((n, K), FREE, dtype=np.int64))
        while self.heap:
            neg_bound, node_id, state = heapq.heappop(self.heap)
            if -neg_bound <= self.best:
                self.log.pruned['bound'] += 1
                continue
            if self.log.nodes >= self.node_budget:
                self.log.suboptimal = True
                break
            free = np.argwhere(state == FREE)
            scores = self.r0[free[:, 0], free[:, 1]]
            i, k = free[int(np.argmax(scores))]
            for value in (1, 0):
                child = state.copy()
                child[i, k] = value
                self.push(child)
        return self.best_x


def branch_and_bound(system: LinkSystem, incumbent: Allocation, powers: np.ndarray=None,
    node_budget: int=DEFAULT_NODE_BUDGET, log: SearchTreeLog=None) -> Allocation:
    '''Sum-rate maximal allocation of the served links.

    Constraints: no two conflicting links share a subchannel, every served
    link holds at least one subchannel, and every served link that is not
    exempt meets `r_min` at `powers`. The bound of a node is the sum of the
    interference-free rates of its variables that are not fixed to 0. Nodes
    are pruned on conflicts, on links left without a possible subchannel,
    on links that cannot reach `r_min` even without interference, and when
    their bound does not beat the incumbent.

    Parameters
    ----------
    system : LinkSystem
    incumbent : Allocation
        Feasible starting allocation, usually from `initial_allocation`.
        Its deferred links stay deferred and its exempt links stay exempt.
    powers : np.ndarray, None
        Powers of the links. If None, `p_max` for all
    node_budget : int
        Maximum nodes. When it is reached the best allocation found so far
        is returned with `suboptimal = True`
    log : SearchTreeLog, None
        Filled with the search statistics if given

    Returns
    -------
    Allocation
    '''
    if log is None:
        log = SearchTreeLog()
    n = len(system)
    if powers is None:
        powers = np.full(n, system.p_max)
    powers = np.asarray(powers, dtype=float)
    served = np.flatnonzero(~incumbent.deferred)
    if len(served) == 0:
        return incumbent.copy()

    sub = system.subsystem(served)
    search = _BranchAndBound(sub, powers[served], incumbent.exempt[served], node_budget, log)
    x_sub = search.solve(incumbent.matrix[served])
    out = incumbent.copy()
    if x_sub is not None:
        out.matrix[served] = x_sub
    out.suboptimal = log.suboptimal
    out.nodes = log.nodes
    if log.suboptimal:
        logger.warning('Branch and bound stopped at its node budget ({}); keeping the ' \
            'incumbent'.format(node_budget))
    return out


# ------------------------------------------------------------------------------
# Power control
# ------------------------------------------------------------------------------
class _PowerProblem:
    '''Power control over the links that hold at least one subchannel
    '''
    def __init__(self, system: LinkSystem, allocation: Allocation):
        self.active = np.flatnonzero(allocation.matrix.any(axis=1))
        sub = system.subsystem(self.active)
        self.x = allocation.matrix[self.active].astype(float)
        self.direct = sub.direct
        self.cross = sub.cross
        self.noise = sub.noise
        self.bandwidth = sub.bandwidth
        self.r_min = sub.r_min
        self.p_max = sub.p_max
        self.constrained = ~allocation.exempt[self.active]

    def terms(self, p: np.ndarray):
        return _dc_terms(self.x, p, self.direct, self.cross, self.noise, self.bandwidth)

    def rates(self, p: np.ndarray) -> np.ndarray:
        return _link_rates(self.x, p, self.direct, self.cross, self.noise, self.bandwidth)

    def feasible(self, p: np.ndarray) -> bool:
        return bool(np.all(self.rates(p)[self.constrained] >= self.r_min))

    def restore_feasibility(self, p0: np.ndarray) -> np.ndarray:
        '''Projected gradient ascent on a soft minimum of the normalized rate
        slacks, stopped as soon as every slack is non-negative.

        Raises
        ------
        InfeasibleStartError
            If no power vector reached meets every rate constraint
        '''
        if self.r_min == 0 or not self.constrained.any():
            return p0
        c = self.constrained

        def softmin(p):
            f, h, gf, gh = self.terms(p)
            s = (f - h)[c] / self.r_min - 1
            z = -SOFTMIN_TEMPERATURE * s
            m = z.max()
            w = np.exp(z - m)
            value = -(m + np.log(w.sum())) / SOFTMIN_TEMPERATURE
            grad = (w / w.sum()) @ (gf - gh)[c] / self.r_min
            return value, grad, s.min()

        p = p0.copy()
        value, grad, worst = softmin(p)
        for _ in range(INNER_MAX_ITERATIONS):
            if worst >= 0:
                return p
            gmax = np.max(np.abs(grad))
            if gmax == 0:
                break
            step = self.p_max / gmax
            moved = False
            while step * gmax > 1e-12 * self.p_max:
                y = np.clip(p + step * grad, 0, self.p_max)
                vy, gy, wy = softmin(y)
                if vy > value:
                    p, value, grad, worst = y, vy, gy, wy
                    moved = True
                    break
                step /= 2
            if not moved:
                break
        if worst >= 0:
            return p
        raise InfeasibleStartError('No power vector meets r_min = {:.4E} bit/s (worst ' \
            'normalized slack {:.4f})'.format(self.r_min, worst))

    def solve_surrogate(self, q: np.ndarray) -> np.ndarray:
        '''Maximize the sum-rate with the subtracted concave terms linearized
        at `q`, over the box and the linearized rate constraints, by projected
        gradient with Armijo backtracking. `q` must be feasible.
        '''
        _, h_q, _, gh_q = self.terms(q)
        lin_grad = gh_q.sum(axis=0)

        def surrogate(p):
            f, _, gf, _ = self.terms(p)
            rates = f - h_q - gh_q @ (p - q)
            return float(np.sum(rates)), rates, gf.sum(axis=0) - lin_grad

        p = q.copy()
        value, _, grad = surrogate(p)
        for _ in range(INNER_MAX_ITERATIONS):
            gmax = np.max(np.abs(grad))
            if gmax == 0:
                break
            step = self.p_max / gmax
            moved = False
            while step * gmax > 1e-12 * self.p_max:
                y = np.clip(p + step * grad, 0, self.p_max)
                vy, ry, gy = surrogate(y)
                if vy >= value + ARMIJO * grad @ (y - p) and vy > value and \
                        np.all(ry[self.constrained] >= self.r_min):
                    improvement = vy - value
                    p, value, grad = y, vy, gy
                    moved = True
                    break
                step /= 2
            if not moved or improvement <= 1e-12 * max(abs(value), 1.):
                break
        return p

    def iterate(self, p0: np.ndarray) -> Tuple[np.ndarray, List[float], int]:
        p = p0
        obj = float(np.sum(self.rates(p)))
        history = [obj]
        iterations = 0
        for iterations in range(1, DC_MAX_ITERATIONS + 1):
            p_new = self.solve_surrogate(p)
            obj_new = float(np.sum(self.rates(p_new)))
            if obj_new < obj or not self.feasible(p_new):
                break
            change = (obj_new - obj) / max(abs(obj), 1e-300)
            p, obj = p_new, obj_new
            history.append(obj)
            if change < DC_TOLERANCE:
                break
        return p, history, iterations


def dc_power_control(system: LinkSystem, allocation: Allocation, powers: np.ndarray=None,
    seed: int=0) -> PowerVector:
    '''Power control by the difference-of-concave algorithm.

    Each rate is log2(signal + interference + noise) - log2(interference +
    noise). Every outer iteration linearizes the subtracted term at the
    current powers and maximizes the resulting concave lower bound of the
    sum-rate over [0, p_max] and the linearized rate constraints. The lower
    bound is tight at the current powers, so the sum-rate never decreases.
    Iteration stops when the relative change is below `DC_TOLERANCE` or
    after `DC_MAX_ITERATIONS`.

    With at most `MULTI_START_LINKS` links, the iteration is also started
    from every feasible corner of the box and a few seeded random points,
    and the best result is kept.

    Parameters
    ----------
    system : LinkSystem
    allocation : Allocation
    powers : np.ndarray, None
        Starting powers. If None, `p_max` for all
    seed : int
        Seed of the random starting points

    Raises
    ------
    InfeasibleStartError
        If no power vector meets `r_min` for the non-exempt links
    '''
    n = len(system)
    if powers is None:
        powers = np.full(n, system.p_max)
    powers = np.clip(np.asarray(powers, dtype=float), 0, system.p_max)
    prob = _PowerProblem(system, allocation)
    m = len(prob.active)
    out = np.zeros(n)
    if m == 0:
        return PowerVector(out, system.p_max)

    start = prob.restore_feasibility(powers[prob.active])
    starts = [start]
    if m <= MULTI_START_LINKS:
        for corner in itertools.product((0., system.p_max), repeat=m):
            starts.append(np.array(corner))
        rng = np.random.default_rng(seed)
        starts.extend(rng.uniform(0, system.p_max, size=(N_RANDOM_POWER_STARTS, m)))

    best = None
    for i, p0 in enumerate(starts):
        if i > 0 and not prob.feasible(p0):
            continue
        p, history, iterations = prob.iterate(p0)
        if best is None or history[-1] > best[1][-1] * (1 + 1e-9):
            best = (p, history, iterations)
    p, history, iterations = best
    out[prob.active] = p
    return PowerVector(out, system.p_max, iterations=iterations, history=history)


# ------------------------------------------------------------------------------
# Outer loop
# ------------------------------------------------------------------------------
@dataclass
class SlotContext:
    '''Everything `optimize_slot` needs about the slot

    Parameters
    ----------
    links : list(Link)
        Links of the slot, after mode selection and relay pairing
    positions : dict (int -> Point3)
        Positions of all UAVs at the start of the slot
    segments : dict (int -> Segment)
        Active segment of each UAV (a hover segment if it does not move)
    remaining_time : dict (int -> float)
        Time left until each UAV's segment deadline, s
    bs : Point3
    params : RadioParams
    n_subchannels : int
    p_max, v_max, slot_duration : float
    node_budget : int
    '''
    links: List[Link]
    positions: Dict[int, Point3]
    segments: Dict[int, Segment]
    remaining_time: Dict[int, float]
    bs: Point3
    params: RadioParams
    n_subchannels: int
    p_max: float
    v_max: float
    slot_duration: float
    node_budget: int = DEFAULT_NODE_BUDGET


@dataclass
class SlotDecision:
    '''Result of `optimize_slot`

    `system` holds the expected gains at `end_positions`, where the
    transmission is evaluated.
    '''
    speeds: Dict[int, float]
    end_positions: Dict[int, Point3]
    system: LinkSystem
    allocation: Allocation
    powers: PowerVector
    objective_history: List[float]
    improving_rounds: int = 0
    bnb_nodes: int = 0
    dc_iterations: int = 0
    deadline_conflicts: Set[int] = field(default_factory=set)
    search_logs: List[SearchTreeLog] = field(default_factory=list)


def build_system(context: SlotContext, positions: Dict[int, Point3], r_min: float) -> LinkSystem:
    gains = GainTable.expected(required_pairs(context.links), positions, context.bs,
        context.params, context.n_subchannels)
    return LinkSystem.from_gains(context.links, gains, context.params, r_min=r_min,
        p_max=context.p_max)

def _end_positions(context: SlotContext, speeds: Dict[int, float]) -> Dict[int, Point3]:
    return {uid: advance(p, context.segments[uid], speeds[uid], context.slot_duration)
        for uid, p in context.positions.items()}

def _speed_block(context: SlotContext, system: LinkSystem, allocation: Allocation,
    powers: np.ndarray, end_positions: Dict[int, Point3],
    r_min: float) -> Tuple[Dict[int, float], Set[int]]:
    '''Speed of every UAV with the interference of `system` frozen. Returns
    the speeds and the UAVs whose deadline speed violates `r_min`.
    '''
    speeds = {}
    conflicts = set()
    link_of = {l.uav_id: i for i, l in enumerate(system.links)}
    for uid, pos in context.positions.items():
        seg = context.segments[uid]
        i = link_of.get(uid)
        if seg.remaining(pos) == 0:
            speeds[uid] = 0.
            continue
        if i is None or allocation.deferred[i] or allocation.exempt[i]:
            speeds[uid] = context.v_max
            continue
        link = system.links[i]
        ks = allocation.subchannels(i)
        interference = []
        for k in ks:
            on = allocation.matrix[:, k].copy()
            on[i] = False
            interference.append(system.noise + float(np.sum(powers[on] * system.cross[on, i, k])))
        peer = context.bs if link.is_u2n else end_positions[link.receiver]
        try:
            speeds[uid] = control_speed(pos, seg, peer, interference, powers[i],
                context.params, r_min, context.v_max, context.slot_duration,
                context.remaining_time[uid], u2n=link.is_u2n)
        except DeadlineQoSConflictError as e:
            speeds[uid] = e.speed
            conflicts.add(uid)
    return speeds, conflicts

def optimize_slot(context: SlotContext, r_min: float, deferred: np.ndarray=None,
    search_log: bool=False) -> SlotDecision:
    '''Joint speed control and radio resource management of one slot.

    The initial point is the greedy allocation at full power with speeds from
    speed control. Each round then runs speed control, branch and bound and
    DC power control in turn; a block's result is kept only if it does not
    lower the expected sum-rate (and, for speeds, keeps every non-exempt
    link above `r_min`). Rounds stop when the relative improvement is below
    `SLOT_TOLERANCE` or after `SLOT_MAX_ROUNDS`.

    Parameters
    ----------
    context : SlotContext
    r_min : float
        Minimum rate, bit/s
    deferred : np.ndarray (n,) bool, None
        Links the protocol already deferred this slot
    search_log : bool
        If True, keep the statistics of every branch-and-bound search

    Returns
    -------
    SlotDecision
    '''
    n = len(context.links)
    powers = np.full(n, context.p_max)

    start_system = build_system(context, context.positions, r_min)
    allocation = initial_allocation(start_system, powers, deferred=deferred)

    speeds, conflicts = _speed_block(context, start_system, allocation, powers,
        context.positions, r_min)
    end_positions = _end_positions(context, speeds)
    system = build_system(context, end_positions, r_min)

    # Links the move left below r_min are excused for the rest of the slot
    if n > 0:
        rates = system.rates(allocation.matrix, powers)
        short = (rates < r_min) & ~allocation.deferred & ~allocation.exempt
        if short.any():
            allocation.exempt |= short
    for i, l in enumerate(context.links):
        if l.uav_id in conflicts and not allocation.deferred[i]:
            allocation.exempt[i] = True

    objective = system.sum_rate(allocation.matrix, powers) if n > 0 else 0.
    history = [objective]
    improving = 0
    nodes = 0
    dc_iterations = 0
    logs = []
    power_vector = PowerVector(powers, context.p_max)

    for round_ in range(SLOT_MAX_ROUNDS):
        if n == 0:
            break
        start_objective = objective

        # Speed control
        cand_speeds, cand_conflicts = _speed_block(context, system, allocation, powers,
            end_positions, r_min)
        if cand_speeds != speeds:
            cand_end = _end_positions(context, cand_speeds)
            cand_system = build_system(context, cand_end, r_min)
            exempt = allocation.exempt.copy()
            for i, l in enumerate(context.links):
                if l.uav_id in cand_conflicts and not allocation.deferred[i]:
                    exempt[i] = True
            value = cand_system.sum_rate(allocation.matrix, powers)
            rates = cand_system.rates(allocation.matrix, powers)
            keeps_qos = np.all(rates[~exempt & ~allocation.deferred] >= r_min)
            if value >= objective and keeps_qos:
                speeds, end_positions, system = cand_speeds, cand_end, cand_system
                allocation.exempt = exempt
                conflicts |= cand_conflicts
                objective = value

        # Subchannel allocation
        log = SearchTreeLog()
        cand_alloc = branch_and_bound(system, allocation, powers, node_budget=context.node_budget,
            log=log)
        nodes += log.nodes
        if search_log:
            logs.append(log)
        value = system.sum_rate(cand_alloc.matrix, powers)
        if value >= objective:
            allocation, objective = cand_alloc, value

        # Power control
        try:
            cand_powers = dc_power_control(system, allocation, powers)
            dc_iterations += cand_powers.iterations
            value = system.sum_rate(allocation.matrix, cand_powers.values)
            if value >= objective:
                powers, objective = cand_powers.values.copy(), value
                power_vector = cand_powers
        except InfeasibleStartError as e:
            logger.debug('Power control skipped: {}'.format(e))

        history.append(objective)
        gain = (objective - start_objective) / max(abs(start_objective), 1e-300)
        if gain >= SLOT_TOLERANCE:
            improving += 1
        else:
            break

    logger.debug('Slot optimized: sum-rate {:.4E} bit/s after {} improving rounds'.format(
        objective, improving))
    return SlotDecision(speeds=speeds, end_positions=end_positions, system=system,
        allocation=allocation,
        powers=PowerVector(powers, context.p_max, power_vector.iterations,
            power_vector.history),
        objective_history=history, improving_rounds=improving, bnb_nodes=nodes,
        dc_iterations=dc_iterations, deadline_conflicts=conflicts, search_logs=logs)
