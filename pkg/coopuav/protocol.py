'''The slotted sense-and-send protocol.

Every slot, each UAV first follows its plan: it flies along its active
segment, or hovers to sense a task or to upload from a communication point.
The communication phase of the slot then runs four steps in order:

1. Report: every UAV sends a beacon with its id and position.
2. Mode selection: a UAV whose expected U2N SNR at full power reaches the
   threshold transmits directly (U2N). The others pick the nearest such UAV
   as a relay (U2U). A relay serves at most one requester per slot.
3. Design and allocation: the base station chooses speeds, subchannels and
   powers (`rrm.optimize_slot` for the cooperative scheme, orthogonal
   round-robin otherwise).
4. Transmission: the UAVs move to their end-of-slot positions, the channel
   is drawn and the realized rates move data to the base station.

Relays decode and forward within the slot: a relay's U2N link first
carries its own backlog and then forwards what the requester sent, limited
by the U2U capacity and the relay's residual U2N capacity.
'''
import enum
import math
import numpy as np
from dataclasses import dataclass, field
from coopuav.logger import logger

# Typing
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

from .geometry import Point3, Segment, advance, distance
from .channel import GainTable, RadioParams, u2n_expected_gain, sinr, rate, REFERENCE_DISTANCE
from .sensing import SensingModel, SensingTask, TaskState, record_sensing
from .names import BS, MODES, SCHEMES
from . import trajectory
from .rrm import Link, LinkSystem, SlotContext, SearchTreeLog, required_pairs, \
    optimize_slot, round_robin_allocation, DEFAULT_NODE_BUDGET
from .pylab.errors import NoRelayAvailableError, SlotError

# Distance under which a UAV counts as arrived at a waypoint (m)
ARRIVAL_TOLERANCE = 1e-9

# What a UAV does with its plan in a slot
MOVING = 'moving'
SENSING = 'sensing'
UPLOADING = 'uploading'
FINISHED = 'finished'


class SlotPhase(enum.IntEnum):
    '''Steps of the communication phase, in execution order
    '''
    REPORT = 0
    MODE_SELECTION = 1
    DESIGN_AND_ALLOCATE = 2
    TRANSMISSION = 3


@dataclass(frozen=True)
class Beacon:
    uav_id: int
    position: Point3
    timestamp: int


@dataclass(frozen=True)
class Assignment:
    '''Decision for the link of one UAV in one slot

    Parameters
    ----------
    uav_id : int
    mode : str
        `names.MODES.U2N` or `names.MODES.U2U`
    relay : int, None
        Relay UAV (U2U only)
    subchannels : tuple(int)
    tx_power : float
        Transmit power per subchannel, W
    '''
    uav_id: int
    mode: str
    relay: Optional[int] = None
    subchannels: Tuple[int, ...] = ()
    tx_power: float = 0.

    def __post_init__(self):
        if self.mode not in (MODES.U2N, MODES.U2U):
            raise ValueError('`mode` ({}) must be U2N or U2U'.format(self.mode))
        if self.mode == MODES.U2U and (self.relay is None or self.relay == self.uav_id):
            raise ValueError('UAV {}: a U2U assignment needs a relay other than ' \
                'itself'.format(self.uav_id))
        if self.mode == MODES.U2N and self.relay is not None:
            raise ValueError('UAV {}: a U2N assignment has no relay'.format(self.uav_id))
        if not (self.tx_power >= 0 and math.isfinite(self.tx_power)):
            raise ValueError('`tx_power` ({}) must be >= 0'.format(self.tx_power))

    @property
    def receiver(self) -> Hashable:
        return BS if self.mode == MODES.U2N else self.relay


class UavState:
    '''A UAV, its task queue and its plan

    Parameters
    ----------
    id : int
    position : Point3
    tasks : list(SensingTask)
        Tasks in execution order
    '''
    def __init__(self, id: int, position: Point3, tasks: Sequence[SensingTask]):
        self.id = int(id)
        self.position = position
        self.tasks = list(tasks)
        self.plan = None
        self.speed = 0.
        self.mode = MODES.IDLE

    def __str__(self):
        return 'UAV {} at {} ({}, backlog {:.0f} bits)'.format(self.id, self.position,
            self.mode, self.backlog)

    @property
    def backlog(self) -> float:
        return float(sum(t.backlog for t in self.tasks))

    def deliver(self, bits: float) -> float:
        '''Deliver up to `bits` of the backlog, oldest task first. Returns
        the bits accepted.
        '''
        accepted = 0.
        for task in self.tasks:
            if bits - accepted <= 0:
                break
            if task.backlog > 0:
                accepted += task.deliver(bits - accepted)
        return accepted


@dataclass
class UavSlotRecord:
    '''What one UAV did in one slot. `rate` is the realized capacity of its
    link; `sinr_db` the effective SINR over its subchannels.
    '''
    mode: str
    relay: Optional[int]
    subchannels: Tuple[int, ...]
    power: float
    sinr_db: float
    rate: float
    position: Point3
    speed: float
    qos_violation: bool
    sensing: bool = False
    transmitting: bool = False


@dataclass
class SlotRecord:
    '''Metrics of one slot. `sum_rate` is the sum of the per-UAV `rate`s.
    '''
    slot: int
    time: float
    sum_rate: float
    delivered_bits: float
    qos_violations: int
    tasks_delivered: int
    uavs: Dict[int, UavSlotRecord]
    task_states: Dict[str, str]
    phases: List[SlotPhase] = field(default_factory=list)
    bnb_nodes: int = 0
    dc_iterations: int = 0
    search_logs: List[SearchTreeLog] = field(default_factory=list)


class World:
    '''Mutable state of one simulation

    Parameters
    ----------
    uavs : list(UavState)
    bs : Point3
    params : RadioParams
    model : SensingModel
    scheme : str
        One of `names.SCHEMES`
    n_subchannels : int
    snr_threshold_db : float
        Mode-selection threshold
    r_min : float
        Minimum rate of a link, bit/s
    p_max : float
        Maximum transmit power per subchannel, W
    v_max : float
        Speed cap, m/s
    max_altitude : float
        Highest allowed communication point, m
    slot_duration : float
        s
    completion_budget : float
        Time by which the plans should be flown, s
    streams : dict (str -> numpy.random.Generator)
        Named random streams (`pylab.random.streams`)
    node_budget : int
        Branch-and-bound node cap
    keep_search_logs : bool
        If True, slot records carry branch-and-bound statistics
    '''
    def __init__(self, uavs: Sequence[UavState], bs: Point3, params: RadioParams,
        model: SensingModel, scheme: str, n_subchannels: int, snr_threshold_db: float,
        r_min: float, p_max: float, v_max: float, max_altitude: float, slot_duration: float,
        completion_budget: float, streams: Dict[str, np.random.Generator],
        node_budget: int=DEFAULT_NODE_BUDGET, keep_search_logs: bool=False):
        if scheme not in SCHEMES:
            raise ValueError('`scheme` ({}) not recognized. Options: {}'.format(scheme,
                list(SCHEMES)))
        ids = [u.id for u in uavs]
        if len(set(ids)) != len(ids):
            raise ValueError('UAV ids must be unique ({})'.format(ids))
        self.uavs = sorted(uavs, key=lambda u: u.id)
        self.bs = bs
        self.params = params
        self.model = model
        self.scheme = scheme
        self.n_subchannels = int(n_subchannels)
        self.snr_threshold_db = float(snr_threshold_db)
        self.r_min = float(r_min)
        self.p_max = float(p_max)
        self.v_max = float(v_max)
        self.max_altitude = float(max_altitude)
        self.slot_duration = float(slot_duration)
        self.completion_budget = float(completion_budget)
        self.streams = streams
        self.node_budget = int(node_budget)
        self.keep_search_logs = keep_search_logs
        self.slot = 0

    @property
    def time(self) -> float:
        return self.slot * self.slot_duration

    @property
    def tasks(self) -> List[SensingTask]:
        return [t for u in self.uavs for t in u.tasks]

    def uav(self, uav_id: int) -> UavState:
        for u in self.uavs:
            if u.id == uav_id:
                return u
        raise KeyError('No UAV {}'.format(uav_id))

    def all_delivered(self) -> bool:
        return all(t.state == TaskState.DELIVERED for t in self.tasks)

    def plan(self):
        '''Plan the trajectory of every UAV for the scheme of the world
        '''
        rng = self.streams['planner']
        for u in self.uavs:
            if self.scheme == SCHEMES.COOPERATIVE:
                u.plan = trajectory.plan_cooperative(u.id, u.position, u.tasks, self.model,
                    self.bs, self.params, self.completion_budget, rng=rng)
            elif self.scheme == SCHEMES.NONCOOPERATIVE:
                u.plan = trajectory.plan_noncooperative(u.id, u.position, u.tasks, self.model,
                    self.bs, self.params, self.completion_budget, r_min=self.r_min,
                    p_max=self.p_max, max_altitude=self.max_altitude, rng=rng)
            else:
                u.plan = trajectory.plan_separate(u.id, u.position, u.tasks, self.model,
                    self.bs, self.params, self.completion_budget, r_min=self.r_min,
                    p_max=self.p_max, max_altitude=self.max_altitude)
            u.plan.start_segment(self.time, self.sensing_reserve(u))
            logger.debug('UAV {}: {} waypoints planned'.format(u.id, len(u.plan.waypoints)))

    def sensing_reserve(self, uav: UavState) -> float:
        '''Expected hovering time for the unsensed tasks of `uav`, s
        '''
        plan = uav.plan
        tasks = {t.id: t for t in uav.tasks}
        points, queued = [], []
        for i in range(max(plan.index, 1), len(plan.waypoints)):
            task = tasks.get(plan.task_ids[i])
            if plan.kinds[i] == trajectory.SENSE and task is not None and \
                    task.state < TaskState.SENSED:
                points.append(plan.waypoints[i])
                queued.append(task)
        return trajectory.sensing_reserve(points, queued, self.model, self.slot_duration)


def _task(uav: UavState, task_id: Optional[str]) -> Optional[SensingTask]:
    for t in uav.tasks:
        if t.id == task_id:
            return t
    return None

def follow_plan(world: World, uav: UavState) -> str:
    '''Move the plan of `uav` past every waypoint it has finished with and
    report what the UAV does this slot.

    A UAV at a sensing waypoint activates the task and hovers until it is
    sensed. At a communication waypoint it hovers until the task is
    delivered. Communication waypoints of already delivered tasks are
    skipped.
    '''
    plan = uav.plan
    while not plan.finished:
        task = _task(uav, plan.target_task)
        kind = plan.target_kind
        at_target = distance(uav.position, plan.waypoints[plan.index]) <= ARRIVAL_TOLERANCE
        skip = kind == trajectory.COMM and task.state == TaskState.DELIVERED
        if skip and not at_target:
            plan.skip_target(uav.position)
            plan.start_segment(world.time, world.sensing_reserve(uav))
            continue
        if not skip:
            if not at_target:
                return MOVING
            uav.position = plan.waypoints[plan.index]
            if kind == trajectory.SENSE:
                task.activate()
                if task.state == TaskState.ACTIVE:
                    return SENSING
            elif kind == trajectory.COMM:
                return UPLOADING
        plan.next_waypoint()
        plan.start_segment(world.time, world.sensing_reserve(uav))
    return FINISHED

def collect_reports(uavs: Sequence[UavState], slot: int=0) -> List[Beacon]:
    '''One beacon per UAV, in id order
    '''
    return [Beacon(uav_id=u.id, position=u.position, timestamp=slot)
        for u in sorted(uavs, key=lambda u: u.id)]

def u2n_snr_db(position: Point3, bs: Point3, params: RadioParams, p_max: float) -> float:
    '''Expected U2N SNR at full power, dB
    '''
    g = u2n_expected_gain(position, bs, params)
    return 10 * math.log10(p_max * g / params.noise_power)

def select_mode(position: Point3, bs: Point3, params: RadioParams, threshold_db: float,
    p_max: float) -> str:
    '''U2N if the expected SNR at full power reaches `threshold_db`, else U2U
    '''
    if u2n_snr_db(position, bs, params, p_max) >= threshold_db:
        return MODES.U2N
    return MODES.U2U

def pair_relay(requester: Beacon, candidates: Sequence[Beacon], bs: Point3, params: RadioParams,
    threshold_db: float, p_max: float) -> int:
    '''Nearest candidate whose own U2N SNR reaches the threshold. Ties go to
    the lowest id.

    Raises
    ------
    NoRelayAvailableError
        If no candidate qualifies
    '''
    best = None
    for c in candidates:
        if c.uav_id == requester.uav_id:
            continue
        d = distance(requester.position, c.position)
        if d < REFERENCE_DISTANCE:
            continue
        if u2n_snr_db(c.position, bs, params, p_max) < threshold_db:
            continue
        key = (d, c.uav_id)
        if best is None or key < best:
            best = key
    if best is None:
        raise NoRelayAvailableError('No relay available for UAV {} at {}'.format(
            requester.uav_id, requester.position))
    return best[1]

def defer_u2n_links(links: Sequence[Link], n_subchannels: int, slot: int) -> np.ndarray:
    '''U2N links left out this slot when they outnumber the subchannels.

    The served U2N links are `n_subchannels` consecutive ones (in link
    order) starting at `slot` modulo their count. A U2U link whose relay's
    U2N link is deferred is deferred too.
    '''
    deferred = np.zeros(len(links), dtype=bool)
    u2n = [i for i, l in enumerate(links) if l.is_u2n]
    if len(u2n) > n_subchannels:
        start = slot % len(u2n)
        served = {u2n[(start + j) % len(u2n)] for j in range(n_subchannels)}
        for i in u2n:
            deferred[i] = i not in served
        out = {links[i].uav_id for i in u2n if deferred[i]}
        for i, l in enumerate(links):
            if not l.is_u2n and l.receiver in out:
                deferred[i] = True
    return deferred

def _effective_sinr_db(capacity: float, n_subchannels: int, bandwidth: float) -> float:
    if n_subchannels == 0:
        return float('nan')
    s = 2 ** (capacity / (n_subchannels * bandwidth)) - 1
    return 10 * math.log10(s) if s > 0 else float('-inf')

def run_slot(world: World, scheme: str=None,
    rng_streams: Dict[str, np.random.Generator]=None) -> SlotRecord:
    '''Execute one slot of the protocol and advance the world.

    Parameters
    ----------
    world : World
    scheme : str, None
        Scheme to run. If None, `world.scheme`
    rng_streams : dict, None
        Named random streams. If None, `world.streams`

    Returns
    -------
    SlotRecord

    Raises
    ------
    SlotError
        Wrapping any error raised during the slot, with the slot index
    '''
    scheme = scheme or world.scheme
    streams = rng_streams or world.streams
    try:
        return _run_slot(world, scheme, streams)
    except SlotError:
        raise
    except Exception as e:
        raise SlotError(world.slot, e) from e

def _run_slot(world: World, scheme: str, streams: Dict[str, np.random.Generator]) -> SlotRecord:
    now = world.time
    dt = world.slot_duration
    K = world.n_subchannels
    phases = []

    # Plans and sensing
    status = {u.id: follow_plan(world, u) for u in world.uavs}
    sensed = set()
    for u in world.uavs:
        if status[u.id] == SENSING:
            task = _task(u, u.plan.target_task)
            record_sensing(task, u.position, world.model, streams['sensing'])
            sensed.add(u.id)

    # Report
    phases.append(SlotPhase.REPORT)
    beacons = collect_reports(world.uavs, world.slot)
    by_id = {b.uav_id: b for b in beacons}

    # Mode selection
    phases.append(SlotPhase.MODE_SELECTION)
    if scheme == SCHEMES.SEPARATE:
        senders = [u.id for u in world.uavs if status[u.id] == UPLOADING and u.backlog > 0]
    else:
        senders = [u.id for u in world.uavs if u.backlog > 0]
    modes = {u.id: MODES.IDLE for u in world.uavs}
    relay_of = {}
    flagged = set()
    if scheme == SCHEMES.COOPERATIVE:
        for uid in senders:
            modes[uid] = select_mode(by_id[uid].position, world.bs, world.params,
                world.snr_threshold_db, world.p_max)
        busy = set()
        for uid in senders:
            if modes[uid] != MODES.U2U:
                continue
            candidates = [b for b in beacons if b.uav_id not in busy and
                modes[b.uav_id] != MODES.U2U]
            try:
                relay = pair_relay(by_id[uid], candidates, world.bs, world.params,
                    world.snr_threshold_db, world.p_max)
            except NoRelayAvailableError as e:
                logger.debug('Slot {}: {}; falling back to U2N'.format(world.slot, e))
                modes[uid] = MODES.U2N
                flagged.add(uid)
                continue
            relay_of[uid] = relay
            busy.add(relay)
            modes[relay] = MODES.U2N
    else:
        for uid in senders:
            modes[uid] = MODES.U2N

    links = []
    for u in world.uavs:
        if modes[u.id] == MODES.U2N:
            links.append(Link(u.id, BS, MODES.U2N))
        elif modes[u.id] == MODES.U2U:
            links.append(Link(u.id, relay_of[u.id], MODES.U2U))

    # Design and allocation
    phases.append(SlotPhase.DESIGN_AND_ALLOCATE)
    positions = {u.id: u.position for u in world.uavs}
    segments = {}
    for u in world.uavs:
        if status[u.id] == MOVING:
            segments[u.id] = u.plan.active_segment
        else:
            segments[u.id] = Segment(u.position, u.position)

    bnb_nodes = 0
    dc_iterations = 0
    logs = []
    if scheme == SCHEMES.COOPERATIVE:
        context = SlotContext(links=links, positions=positions, segments=segments,
            remaining_time={u.id: u.plan.segment_deadline - now for u in world.uavs},
            bs=world.bs, params=world.params, n_subchannels=K, p_max=world.p_max,
            v_max=world.v_max, slot_duration=dt, node_budget=world.node_budget)
        decision = optimize_slot(context, world.r_min,
            deferred=defer_u2n_links(links, K, world.slot), search_log=world.keep_search_logs)
        speeds = decision.speeds
        end_positions = decision.end_positions
        system = decision.system
        allocation = decision.allocation
        powers = decision.powers.values
        bnb_nodes = decision.bnb_nodes
        dc_iterations = decision.dc_iterations
        logs = decision.search_logs
        flagged |= decision.deadline_conflicts
    else:
        speeds = {uid: world.v_max if status[uid] == MOVING else 0. for uid in positions}
        end_positions = {uid: advance(p, segments[uid], speeds[uid], dt)
            for uid, p in positions.items()}
        if links:
            gains = GainTable.expected(required_pairs(links), end_positions, world.bs,
                world.params, K)
            system = LinkSystem.from_gains(links, gains, world.params, r_min=world.r_min,
                p_max=world.p_max)
        else:
            system = None
        allocation = round_robin_allocation(system, world.slot) if links else None
        powers = np.full(len(links), world.p_max)

    assignments = []
    served = {l.uav_id for i, l in enumerate(links)
        if l.is_u2n and not allocation.deferred[i] and allocation.matrix[i].any()}
    for i, l in enumerate(links):
        ks = allocation.subchannels(i)
        if allocation.deferred[i] or len(ks) == 0:
            continue
        # A requester whose relay does not transmit has nowhere to send
        if not l.is_u2n and l.receiver not in served:
            continue
        assignments.append(Assignment(uav_id=l.uav_id, mode=l.mode,
            relay=None if l.is_u2n else l.receiver, subchannels=ks,
            tx_power=float(powers[i])))

    # Transmission
    phases.append(SlotPhase.TRANSMISSION)
    for u in world.uavs:
        u.position = end_positions[u.id]
        u.speed = speeds[u.id]
        u.mode = modes[u.id]

    capacity = {}
    if assignments:
        realized = GainTable.expected(required_pairs(links), end_positions, world.bs,
            world.params, K).realize(world.params, streams['channel'])
        for a in assignments:
            capacity[a.uav_id] = float(sum(
                rate(sinr(a, assignments, realized, world.params, subchannel=k),
                world.params.bandwidth_per_subchannel) for k in a.subchannels))

    delivered = 0.
    residual = {}
    for a in assignments:
        if a.mode == MODES.U2N:
            bits = capacity[a.uav_id] * dt
            own = world.uav(a.uav_id).deliver(bits)
            residual[a.uav_id] = bits - own
            delivered += own
    for a in assignments:
        if a.mode == MODES.U2U:
            requester = world.uav(a.uav_id)
            bits = min(capacity[a.uav_id] * dt, residual.get(a.relay, 0.), requester.backlog)
            got = requester.deliver(bits)
            residual[a.relay] = residual.get(a.relay, 0.) - got
            delivered += got

    # Record
    expected = system.rates(allocation.matrix, powers) if links else np.zeros(0)
    records = {}
    for u in world.uavs:
        i = next((j for j, l in enumerate(links) if l.uav_id == u.id), None)
        a = next((a for a in assignments if a.uav_id == u.id), None)
        violation = u.id in flagged
        if i is not None:
            violation = violation or a is None or bool(allocation.exempt[i]) or \
                expected[i] < world.r_min
        r = capacity.get(u.id, 0.)
        records[u.id] = UavSlotRecord(mode=modes[u.id],
            relay=relay_of.get(u.id),
            subchannels=a.subchannels if a is not None else (),
            power=a.tx_power if a is not None else 0.,
            sinr_db=_effective_sinr_db(r, len(a.subchannels) if a is not None else 0,
                world.params.bandwidth_per_subchannel),
            rate=r, position=u.position, speed=speeds[u.id], qos_violation=violation,
            sensing=u.id in sensed, transmitting=a is not None)

    record = SlotRecord(slot=world.slot, time=now + dt,
        sum_rate=float(sum(r.rate for r in records.values())),
        delivered_bits=delivered,
        qos_violations=sum(r.qos_violation for r in records.values()),
        tasks_delivered=sum(t.state == TaskState.DELIVERED for t in world.tasks),
        uavs=records, task_states={t.id: t.state.name for t in world.tasks},
        phases=phases, bnb_nodes=bnb_nodes, dc_iterations=dc_iterations, search_logs=logs)
    logger.debug('Slot {}: sum-rate {:.4E} bit/s, {:.0f} bits delivered'.format(
        world.slot, record.sum_rate, delivered))
    world.slot += 1
    return record
