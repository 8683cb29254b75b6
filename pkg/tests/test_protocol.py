import pytest
import numpy as np
from scipy.optimize import brentq

from coopuav.geometry import Point3
from coopuav.sensing import SensingTask, TaskState
from coopuav.names import BS, MODES, SCHEMES
from coopuav.rrm import Link
from coopuav.protocol import World, UavState, Assignment, Beacon, SlotPhase, \
    SENSING, MOVING, FINISHED, run_slot, follow_plan, collect_reports, u2n_snr_db, \
    select_mode, pair_relay, defer_u2n_links
from coopuav.pylab import random as plrandom
from coopuav.pylab.errors import NoRelayAvailableError, SlotError
from conftest import sensed_task

THRESHOLD_DB = 20.
P_MAX = 0.2


def _at_snr(target_db, bs, params, altitude=100.):
    '''Point on the +x axis whose expected U2N SNR is `target_db`'''
    f = lambda d: u2n_snr_db(Point3(d, 0., altitude), bs, params, P_MAX) - target_db
    return Point3(brentq(f, 1., 5000., xtol=1e-6), 0., altitude)

def _world(uavs, bs, params, model, scheme=SCHEMES.COOPERATIVE, K=4, seed=0):
    world = World(uavs, bs=bs, params=params, model=model, scheme=scheme, n_subchannels=K,
        snr_threshold_db=THRESHOLD_DB, r_min=2e5, p_max=P_MAX, v_max=20., max_altitude=300.,
        slot_duration=0.1, completion_budget=200., streams=plrandom.streams(seed),
        node_budget=10000)
    world.plan()
    return world

def _threshold_world(bs, params, model, scheme=SCHEMES.COOPERATIVE):
    strong = _at_snr(THRESHOLD_DB + 1, bs, params)
    weak = _at_snr(THRESHOLD_DB - 1, bs, params)
    uavs = [UavState(0, strong, [sensed_task('a', Point3(strong.x, 0., 0.))]),
        UavState(1, weak, [sensed_task('b', Point3(weak.x, 0., 0.))])]
    return _world(uavs, bs, params, model, scheme=scheme)


def test_select_mode_threshold(bs, params):
    assert select_mode(_at_snr(THRESHOLD_DB + 1, bs, params), bs, params, THRESHOLD_DB,
        P_MAX) == MODES.U2N
    assert select_mode(_at_snr(THRESHOLD_DB - 1, bs, params), bs, params, THRESHOLD_DB,
        P_MAX) == MODES.U2U

def test_pair_relay_nearest_and_ties(bs, params):
    req = Beacon(9, Point3(400., 0., 100.), 0)
    near = [Beacon(3, Point3(100., 50., 100.), 0), Beacon(1, Point3(100., -50., 100.), 0),
        Beacon(2, Point3(50., 0., 100.), 0)]
    # 3 and 1 are equally near: lowest id wins
    assert pair_relay(req, near, bs, params, THRESHOLD_DB, P_MAX) == 1
    with pytest.raises(NoRelayAvailableError):
        pair_relay(req, [req], bs, params, THRESHOLD_DB, P_MAX)
    far = Beacon(4, Point3(5000., 0., 100.), 0)
    with pytest.raises(NoRelayAvailableError):
        pair_relay(req, [far], bs, params, THRESHOLD_DB, P_MAX)

def test_defer_u2n_links():
    links = [Link(i, BS, MODES.U2N) for i in range(4)] + [Link(7, 3, MODES.U2U)]
    assert list(defer_u2n_links(links, 2, slot=0)) == [False, False, True, True, True]
    assert list(defer_u2n_links(links, 2, slot=1)) == [True, False, False, True, True]
    assert list(defer_u2n_links(links, 2, slot=3)) == [False, True, True, False, False]
    assert not defer_u2n_links(links, 4, slot=0).any()

def test_collect_reports():
    uavs = [UavState(2, Point3(0., 0., 60.), []), UavState(0, Point3(1., 0., 60.), [])]
    beacons = collect_reports(uavs, slot=7)
    assert [b.uav_id for b in beacons] == [0, 2]
    assert all(b.timestamp == 7 for b in beacons)

def test_assignment_validation():
    with pytest.raises(ValueError):
        Assignment(uav_id=0, mode=MODES.U2U)
    with pytest.raises(ValueError):
        Assignment(uav_id=0, mode=MODES.U2U, relay=0)
    with pytest.raises(ValueError):
        Assignment(uav_id=0, mode=MODES.U2N, relay=1)
    with pytest.raises(ValueError):
        Assignment(uav_id=0, mode=MODES.IDLE)
    assert Assignment(uav_id=0, mode=MODES.U2U, relay=1).receiver == 1
    assert Assignment(uav_id=0, mode=MODES.U2N).receiver == BS

def test_uav_delivers_oldest_first():
    a = sensed_task('a', Point3(0., 0., 0.), volume=100.)
    b = sensed_task('b', Point3(0., 0., 0.), volume=100.)
    uav = UavState(0, Point3(0., 0., 60.), [a, b])
    assert uav.deliver(150.) == pytest.approx(150.)
    assert a.state == TaskState.DELIVERED
    assert b.backlog == pytest.approx(50.)
    assert uav.backlog == pytest.approx(50.)

def test_follow_plan_senses_at_waypoint(bs, params, model):
    task = SensingTask('a', Point3(100., 0., 0.), 0.5, 1e5, 1)
    uav = UavState(0, Point3(0., 0., 100.), [task])
    world = _world([uav], bs, params, model)
    assert follow_plan(world, uav) == MOVING
    uav.position = uav.plan.waypoints[1]
    assert follow_plan(world, uav) == SENSING
    assert task.state == TaskState.ACTIVE
    task.state = TaskState.DELIVERED
    assert follow_plan(world, uav) == FINISHED

def test_threshold_conformance(bs, params, model):
    world = _threshold_world(bs, params, model)
    record = run_slot(world)
    assert record.uavs[0].mode == MODES.U2N
    assert record.uavs[1].mode == MODES.U2U
    assert record.uavs[1].relay == 0
    assert sorted(r.mode for r in record.uavs.values()) == sorted([MODES.U2N, MODES.U2U])

def test_slot_record(bs, params, model):
    world = _threshold_world(bs, params, model)
    before = sum(u.backlog for u in world.uavs)
    record = run_slot(world)
    assert record.slot == 0
    assert record.time == pytest.approx(0.1)
    assert record.phases == [SlotPhase.REPORT, SlotPhase.MODE_SELECTION,
        SlotPhase.DESIGN_AND_ALLOCATE, SlotPhase.TRANSMISSION]
    assert record.sum_rate == pytest.approx(sum(r.rate for r in record.uavs.values()))
    after = sum(u.backlog for u in world.uavs)
    assert before - after == pytest.approx(record.delivered_bits)
    assert record.delivered_bits <= record.sum_rate * 0.1 + 1e-6
    assert world.slot == 1
    for uid, r in record.uavs.items():
        assert r.speed <= 20.
        assert r.position == world.uav(uid).position

def test_noncooperative_has_no_relaying(bs, params, model):
    world = _threshold_world(bs, params, model, scheme=SCHEMES.NONCOOPERATIVE)
    for _ in range(3):
        record = run_slot(world)
        assert all(r.mode != MODES.U2U for r in record.uavs.values())
        used = [k for r in record.uavs.values() for k in r.subchannels]
        assert len(used) == len(set(used))

def test_separate_uploads_only_from_comm_points(bs, params, model):
    world = _threshold_world(bs, params, model, scheme=SCHEMES.SEPARATE)
    record = run_slot(world)
    # Both UAVs are still flying to their sensing points
    assert all(not r.transmitting for r in record.uavs.values())
    assert record.sum_rate == 0.

def test_slot_errors_are_wrapped(bs, params, model):
    world = _threshold_world(bs, params, model)
    with pytest.raises(SlotError) as e:
        run_slot(world, rng_streams={'sensing': np.random.default_rng(0)})
    assert e.value.slot == 0
    assert isinstance(e.value.error, KeyError)
    assert e.value.exit_code == 2

def test_same_streams_same_slots(bs, params, model):
    a = _threshold_world(bs, params, model)
    b = _threshold_world(bs, params, model)
    for _ in range(3):
        ra, rb = run_slot(a), run_slot(b)
        assert ra.sum_rate == rb.sum_rate
        assert ra.delivered_bits == rb.delivered_bits
