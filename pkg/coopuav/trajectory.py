'''Trajectory planning and per-slot speed control.

Trajectories are planned task by task. For the cooperative scheme, the next
sensing point is the member of the task's feasible crown with the best
expected U2N channel, and the UAV flies a straight segment to it. The
non-cooperative scheme may add a detour to a communication point after a
sensing point whose U2N rate is too low. The separate scheme senses from the
best sensing location and always uploads from a communication point.

Speed is chosen every slot: the fastest speed up to `v_max` that keeps the
link rate at the end of the slot above `r_min`, but never slower than the
speed needed to meet the segment deadline.
'''
import math
import numpy as np
from coopuav.logger import logger

# Typing
from typing import Callable, List, Optional, Sequence, Tuple

from .geometry import Point3, Segment, advance, distance
from .channel import RadioParams, u2n_expected_gain, u2n_expected_gain_array, u2u_gain
from .sensing import SensingModel, SensingTask, feasible_region, best_sensing_point, \
    expected_sensing_slots
from .pylab.errors import UnreachableQoSError, DeadlineQoSConflictError, ZeroDistanceError

# Waypoint kinds
START = 'start'
SENSE = 'sense'
COMM = 'comm'

# Planner constants
N_RANDOM_STARTS = 8
MIN_STEP = 1e-4  # m
GRADIENT_H = 1e-3  # m
MAX_ASCENT_ITERATIONS = 2000
SPEED_TOLERANCE = 1e-3  # m/s
SPEED_SCAN_POINTS = 65
RAY_SAMPLES = 200
BISECTION_ITERATIONS = 60
DIRECTION_MIN_STEP = 1e-6  # rad


class Plan:
    '''Ordered waypoints of one UAV and the bookkeeping of its active segment.

    `waypoints[0]` is the start position. The active segment runs from
    `waypoints[index - 1]` to `waypoints[index]`.

    Parameters
    ----------
    uav_id : int
    waypoints : list(Point3)
    kinds : list(str)
        START, SENSE or COMM for each waypoint
    task_ids : list(str, None)
        Task served at each waypoint
    completion_deadline : float
        Absolute time (s) by which all waypoints should be reached
    '''
    def __init__(self, uav_id: int, waypoints: List[Point3], kinds: List[str],
        task_ids: List[Optional[str]], completion_deadline: float):
        if not (len(waypoints) == len(kinds) == len(task_ids)):
            raise ValueError('`waypoints`, `kinds` and `task_ids` must have the same length')
        if len(waypoints) == 0 or kinds[0] != START:
            raise ValueError('A plan starts with a START waypoint')
        if not completion_deadline > 0:
            raise ValueError('`completion_deadline` ({}) must be > 0'.format(completion_deadline))
        self.uav_id = uav_id
        self.waypoints = list(waypoints)
        self.kinds = list(kinds)
        self.task_ids = list(task_ids)
        self.completion_deadline = float(completion_deadline)
        self.index = 1 if len(waypoints) > 1 else 0
        self.segment_deadline = self.completion_deadline

    def __str__(self):
        return 'Plan(uav {}, waypoint {}/{})'.format(self.uav_id, self.index,
            len(self.waypoints) - 1)

    @property
    def finished(self) -> bool:
        return self.index >= len(self.waypoints) or len(self.waypoints) == 1

    @property
    def active_segment(self) -> Segment:
        if self.finished:
            last = self.waypoints[-1]
            return Segment(last, last)
        return Segment(self.waypoints[self.index - 1], self.waypoints[self.index])

    @property
    def target_kind(self) -> Optional[str]:
        return None if self.finished else self.kinds[self.index]

    @property
    def target_task(self) -> Optional[str]:
        return None if self.finished else self.task_ids[self.index]

    def remaining_lengths(self) -> List[float]:
        return [distance(self.waypoints[i - 1], self.waypoints[i])
            for i in range(max(self.index, 1), len(self.waypoints))]

    def start_segment(self, now: float, reserve: float):
        '''Allot the deadline of the active segment.

        The time left until the completion deadline, minus `reserve` (time
        expected to be spent hovering), is split over the remaining segments
        proportionally to their lengths.
        '''
        self.segment_deadline = allot_deadlines(self.remaining_lengths(), now=now,
            end=self.completion_deadline, reserve=reserve)[0] if not self.finished else now

    def next_waypoint(self):
        self.index += 1

    def skip_target(self, position: Point3):
        '''Drop the target waypoint and fly on from `position` to the next one
        '''
        self.waypoints[self.index] = position
        self.index += 1


def allot_deadlines(lengths: Sequence[float], now: float, end: float, reserve: float) -> List[float]:
    '''Absolute deadlines of consecutive segments, proportional to their lengths

    Parameters
    ----------
    lengths : list(float)
        Segment lengths in flying order
    now : float
        Current time, s
    end : float
        Completion deadline, s
    reserve : float
        Time set aside for hovering, s
    '''
    if len(lengths) == 0:
        return []
    available = end - now - reserve
    total = float(np.sum(lengths))
    if available <= 0 or total == 0:
        return [now] * len(lengths)
    return list(now + available * np.cumsum(lengths) / total)

def _numeric_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, h: float) -> np.ndarray:
    g = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g

def projected_ascent(f: Callable[[np.ndarray], float], project: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray, initial_step: float, min_step: float=MIN_STEP,
    h: float=GRADIENT_H) -> Tuple[np.ndarray, float]:
    '''Maximize `f` over a convex set by projected gradient ascent.

    Each iteration moves `step` along the normalized gradient and projects
    back onto the set. A move is kept only if it improves `f`; otherwise the
    step is halved. The ascent stops when the step falls below `min_step`.

    Returns
    -------
    (np.ndarray, float)
        Final point and its objective
    '''
    x = project(np.asarray(x0, dtype=float))
    fx = f(x)
    step = max(initial_step, min_step)
    for _ in range(MAX_ASCENT_ITERATIONS):
        if step < min_step:
            break
        g = _numeric_gradient(f, x, h)
        norm = np.linalg.norm(g)
        if not np.isfinite(norm) or norm == 0:
            break
        y = project(x + step * g / norm)
        fy = f(y)
        if fy > fx:
            x, fx = y, fy
            step *= 1.5
        else:
            step /= 2
    return x, fx

def plan_next_sensing_point(current: Point3, next_task: SensingTask, model: SensingModel,
    bs: Point3, params: RadioParams, rng: np.random.Generator=None) -> Point3:
    '''Point of the task's feasible crown with the best expected U2N gain.

    Multi-start projected gradient ascent on the gain in dB, started from the
    crown point nearest the base station, the crown apex and
    `N_RANDOM_STARTS` random members. Among equally good results the one
    nearest `current` wins.

    Raises
    ------
    InfeasibleTaskError
        If the crown of the task is empty
    '''
    crown = feasible_region(model, next_task)
    if crown.radius == 0:
        return crown.center
    if rng is None:
        rng = np.random.default_rng(0)

    def objective(x: np.ndarray) -> float:
        g = u2n_expected_gain_array(x, bs, params)[0]
        return 10 * math.log10(max(g, 1e-300))

    starts = [crown.project_array(bs.asarray()), crown.apex.asarray()]
    starts.extend(crown.sample(rng, N_RANDOM_STARTS))

    best = None
    for x0 in starts:
        x, fx = projected_ascent(objective, crown.project_array, x0,
            initial_step=crown.radius / 2)
        p = Point3.from_array(x)
        key = (round(fx, 9), -distance(p, current))
        if best is None or key > best[0]:
            best = (key, p)
    logger.debug('Sensing point for task `{}`: {} ({:.2f} dB)'.format(next_task.id, best[1],
        best[0][0]))
    return best[1]

def expected_u2n_rate(point: Point3, bs: Point3, params: RadioParams, p_max: float,
    n_subchannels: int=1) -> float:
    '''Interference-free U2N rate at `point` at full power
    '''
    try:
        g = u2n_expected_gain(point, bs, params)
    except ZeroDistanceError:
        return 0.
    snr = p_max * g / params.noise_power
    return n_subchannels * params.bandwidth_per_subchannel * math.log2(1 + snr)

def bs_adjacent_point(bs: Point3, min_altitude: float) -> Point3:
    '''Best U2N position: straight above the base station at the lowest
    allowed altitude (at least 1 m above the antenna)
    '''
    return Point3(bs.x, bs.y, max(min_altitude, bs.z + 1.))

def plan_communication_detour(sensing_point: Point3, bs: Point3, params: RadioParams,
    r_min: float, p_max: float, min_altitude: float, max_altitude: float,
    n_subchannels: int=1) -> Point3:
    '''Nearest point to `sensing_point` whose expected U2N rate meets `r_min`.

    Each ray direction from the sensing point reaches the rate boundary at
    some distance; a coarse scan of directions followed by gradient descent
    over the two direction angles finds the shortest one. The point on the
    boundary is found by bisection along the ray.

    Raises
    ------
    UnreachableQoSError
        If even the point above the base station misses `r_min`
    '''
    def feasible(p: np.ndarray) -> bool:
        return expected_u2n_rate(Point3.from_array(p), bs, params, p_max,
            n_subchannels) >= r_min

    s = sensing_point.asarray()
    if r_min <= 0 or feasible(s):
        return sensing_point

    fallback = bs_adjacent_point(bs, min_altitude)
    if not feasible(fallback.asarray()):
        raise UnreachableQoSError('Rate {:.4E} bit/s is not reachable even at {} ' \
            '(best: {:.4E} bit/s)'.format(r_min, fallback, expected_u2n_rate(fallback, bs,
            params, p_max, n_subchannels)))
    reach = distance(sensing_point, fallback)
    max_length = 2 * reach + 1

    def direction(angles: np.ndarray) -> np.ndarray:
        az, pol = angles
        return np.array([math.sin(pol) * math.cos(az), math.sin(pol) * math.sin(az),
            math.cos(pol)])

    def first_hit(angles: np.ndarray) -> float:
        u = direction(angles)
        t_max = max_length
        if u[2] > 1e-12:
            t_max = min(t_max, (max_altitude - s[2]) / u[2])
        elif u[2] < -1e-12:
            t_max = min(t_max, (min_altitude - s[2]) / u[2])
        if t_max <= 0:
            return math.inf
        ts = np.linspace(0, t_max, RAY_SAMPLES + 1)[1:]
        prev = 0.
        for t in ts:
            if feasible(s + t * u):
                lo, hi = prev, t
                for _ in range(BISECTION_ITERATIONS):
                    mid = (lo + hi) / 2
                    if feasible(s + mid * u):
                        hi = mid
                    else:
                        lo = mid
                return hi
            prev = t
        return math.inf

    # Coarse scan, seeded with the direction of the fallback point
    to_fallback = fallback.asarray() - s
    seeds = [np.array([math.atan2(to_fallback[1], to_fallback[0]),
        math.acos(np.clip(to_fallback[2] / np.linalg.norm(to_fallback), -1, 1))])]
    for az in np.linspace(-math.pi, math.pi, 36, endpoint=False):
        for pol in np.linspace(0, math.pi, 19):
            seeds.append(np.array([az, pol]))
    scored = sorted(((first_hit(a), i) for i, a in enumerate(seeds)))
    candidates = [seeds[i] for t, i in scored[:3] if math.isfinite(t)]

    def project(a: np.ndarray) -> np.ndarray:
        return np.array([a[0], min(max(a[1], 0.), math.pi)])

    best_t, best_angles = math.inf, None
    for a0 in candidates:
        a, neg_t = projected_ascent(lambda a: -first_hit(a), project, a0,
            initial_step=math.pi / 36, min_step=DIRECTION_MIN_STEP, h=1e-7)
        if -neg_t < best_t:
            best_t, best_angles = -neg_t, a

    if best_angles is None or best_t > reach:
        return fallback
    q = s + best_t * direction(best_angles)
    q[2] = min(max(q[2], min_altitude), max_altitude)
    return Point3.from_array(q)

def control_speed(position: Point3, segment: Segment, peer: Point3, interference: Sequence[float],
    tx_power: float, params: RadioParams, r_min: float, v_max: float, dt: float,
    remaining_time: float, u2n: bool=False) -> float:
    '''Fastest speed that keeps the link rate at the end of the slot above
    `r_min`, but not slower than the deadline speed.

    The interference plus noise seen at the receiver on each allocated
    subchannel is frozen for the slot, which makes the rate a function of
    the end-of-slot position only. The distance to a fixed peer is convex
    along a line, so the feasible speeds form an interval. When neither the
    deadline speed nor `v_max` is feasible the interval is looked for at the
    closest approach to the peer and on a grid of `SPEED_SCAN_POINTS`
    speeds. Its upper end is found by bisection to `SPEED_TOLERANCE`.

    Parameters
    ----------
    position : Point3
        Current position, on `segment`
    segment : Segment
        Active segment
    peer : Point3
        Receiver of the link (relay UAV, or the base station if `u2n`)
    interference : list(float)
        Interference plus noise power (W) on each allocated subchannel
    tx_power : float
        Transmit power per subchannel (W)
    params : RadioParams
    r_min : float
        Minimum rate, bit/s
    v_max : float
        Speed cap, m/s
    dt : float
        Slot duration, s
    remaining_time : float
        Time left until the segment deadline, s
    u2n : bool
        If True the peer is the base station and the U2N expected gain is used

    Raises
    ------
    DeadlineQoSConflictError
        If no speed between the deadline speed and `v_max` meets
        `r_min`. Its `speed` attribute holds the deadline speed.
    '''
    remaining = segment.remaining(position)
    if remaining == 0:
        return 0.
    if remaining_time > 0:
        v_floor = min(remaining / remaining_time, v_max)
    else:
        v_floor = v_max
    interference = np.asarray(interference, dtype=float)

    def feasible(v: float) -> bool:
        if r_min <= 0 or len(interference) == 0:
            return True
        end = advance(position, segment, v, dt)
        try:
            g = u2n_expected_gain(end, peer, params) if u2n else u2u_gain(end, peer, params)
        except ZeroDistanceError:
            return False
        r = np.sum(params.bandwidth_per_subchannel * np.log2(1 + tx_power * g / interference))
        return r >= r_min

    if feasible(v_max):
        return v_max
    if feasible(v_floor):
        lo = v_floor
    else:
        # Both ends miss the rate: try the closest approach to the peer, then a scan
        s_now, _ = segment.locate(position)
        s_peer, _ = segment.locate(peer)
        v_closest = min(max((s_peer - s_now) / dt, v_floor), v_max)
        candidates = [v_closest] + list(np.linspace(v_floor, v_max, SPEED_SCAN_POINTS)[1:-1])
        lo = next((v for v in candidates if feasible(v)), None)
        if lo is None:
            raise DeadlineQoSConflictError('No speed in [{:.3f}, {:.3f}] m/s meets the rate ' \
                'constraint {:.4E} bit/s'.format(v_floor, v_max, r_min), speed=v_floor)
    hi = v_max
    while hi - lo > SPEED_TOLERANCE:
        mid = (lo + hi) / 2
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo

def sensing_reserve(points: Sequence[Point3], tasks: Sequence[SensingTask], model: SensingModel,
    slot_duration: float) -> float:
    '''Expected hovering time to sense `tasks` from `points`, s
    '''
    return float(sum(expected_sensing_slots(model, p, t) for p, t in zip(points, tasks))) * \
        slot_duration

def plan_cooperative(uav_id: int, start: Point3, tasks: Sequence[SensingTask],
    model: SensingModel, bs: Point3, params: RadioParams, completion_deadline: float,
    rng: np.random.Generator=None) -> Plan:
    '''Successive sensing points with the best U2N channel, joined by straight
    segments
    '''
    waypoints, kinds, task_ids = [start], [START], [None]
    current = start
    for task in tasks:
        current = plan_next_sensing_point(current, task, model, bs, params, rng=rng)
        waypoints.append(current)
        kinds.append(SENSE)
        task_ids.append(task.id)
    return Plan(uav_id, waypoints, kinds, task_ids, completion_deadline)

def plan_noncooperative(uav_id: int, start: Point3, tasks: Sequence[SensingTask],
    model: SensingModel, bs: Point3, params: RadioParams, completion_deadline: float,
    r_min: float, p_max: float, max_altitude: float, rng: np.random.Generator=None) -> Plan:
    '''Sensing points as in the cooperative plan, each followed by a detour
    to a communication point when the sensing point misses `r_min` on one
    subchannel
    '''
    waypoints, kinds, task_ids = [start], [START], [None]
    current = start
    for task in tasks:
        current = plan_next_sensing_point(current, task, model, bs, params, rng=rng)
        waypoints.append(current)
        kinds.append(SENSE)
        task_ids.append(task.id)
        comm = plan_communication_detour(current, bs, params, r_min, p_max,
            min_altitude=model.min_altitude, max_altitude=max_altitude)
        if comm != current:
            waypoints.append(comm)
            kinds.append(COMM)
            task_ids.append(task.id)
            current = comm
    return Plan(uav_id, waypoints, kinds, task_ids, completion_deadline)

def plan_separate(uav_id: int, start: Point3, tasks: Sequence[SensingTask],
    model: SensingModel, bs: Point3, params: RadioParams, completion_deadline: float,
    r_min: float, p_max: float, max_altitude: float) -> Plan:
    '''Best sensing location of each task followed by the nearest
    communication point. The communication waypoint is always present (it
    may coincide with the sensing point) because this scheme uploads only
    while hovering there.
    '''
    waypoints, kinds, task_ids = [start], [START], [None]
    for task in tasks:
        sense = best_sensing_point(model, task)
        comm = plan_communication_detour(sense, bs, params, r_min, p_max,
            min_altitude=model.min_altitude, max_altitude=max_altitude)
        waypoints.extend([sense, comm])
        kinds.extend([SENSE, COMM])
        task_ids.extend([task.id, task.id])
    return Plan(uav_id, waypoints, kinds, task_ids, completion_deadline)
