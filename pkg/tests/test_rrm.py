import pytest
import numpy as np

from coopuav.geometry import Point3, Segment
from coopuav.channel import RadioParams, GainTable
from coopuav.names import BS, MODES
from coopuav.oracle import SmallInstance, random_instance, exhaustive_allocation, \
    grid_power_search
from coopuav.rrm import Link, LinkSystem, Allocation, PowerVector, SearchTreeLog, \
    SlotContext, required_pairs, initial_allocation, round_robin_allocation, \
    branch_and_bound, dc_power_control, optimize_slot, build_system
from coopuav.pylab.errors import InfeasibleStartError


def _relay_links():
    return [Link(0, BS, MODES.U2N), Link(1, BS, MODES.U2N), Link(2, 0, MODES.U2U)]

def _system_from_positions(links, positions, bs, params, K=3, r_min=2e5):
    gains = GainTable.expected(required_pairs(links), positions, bs, params, K)
    return LinkSystem.from_gains(links, gains, params, r_min=r_min, p_max=0.2)

def _positions():
    return {0: Point3(100., 0., 100.), 1: Point3(-150., 80., 120.),
        2: Point3(300., 40., 90.)}


def test_required_pairs():
    pairs = required_pairs(_relay_links())
    assert (0, BS) in pairs and (1, BS) in pairs and (2, 0) in pairs
    # Interference toward the relay and toward the base station
    assert (1, 0) in pairs and (2, BS) in pairs
    # A relay does not interfere with its own receiver
    assert (0, 0) not in pairs

def test_conflicts(bs, params):
    system = _system_from_positions(_relay_links(), _positions(), bs, params)
    c = system.conflict
    assert c[0, 1] and c[1, 0]
    # The requester shares UAV 0 with the relay's U2N link
    assert c[0, 2] and c[2, 0]
    assert not c[1, 2]
    assert not c.diagonal().any()
    # The relay does not interfere with its own incoming link
    assert system.cross[0, 2].sum() == 0

def test_link_system_shapes():
    with pytest.raises(ValueError):
        LinkSystem([Link(0, BS, MODES.U2N)], np.ones((2, 2)), np.zeros((1, 1, 2)),
            np.zeros((1, 1)), 1e-15, 180e3, 0., 0.2)

def test_rates_without_interference(bs, params):
    system = _system_from_positions(_relay_links(), _positions(), bs, params)
    x = np.zeros((3, 3), dtype=bool)
    x[0, 0] = x[1, 1] = x[2, 2] = True
    p = np.full(3, 0.2)
    free = system.interference_free_rates(p)
    assert system.rates(x, p) == pytest.approx([free[0, 0], free[1, 1], free[2, 2]])
    assert not system.has_conflict(x)
    x[1, 0] = True
    assert system.has_conflict(x)

def test_initial_allocation_is_feasible():
    rng = np.random.default_rng(11)
    for _ in range(20):
        system = LinkSystem.from_instance(random_instance(rng, 5, 3))
        alloc = initial_allocation(system)
        served = np.flatnonzero(~alloc.deferred)
        assert not system.has_conflict(alloc.matrix)
        assert alloc.matrix[served].any(axis=1).all()
        assert not alloc.matrix[alloc.deferred].any()
        r = system.rates(alloc.matrix, np.full(len(system), system.p_max))
        ok = ~alloc.deferred & ~alloc.exempt
        assert np.all(r[ok] >= system.r_min)

def test_initial_allocation_keeps_deferred():
    system = LinkSystem.from_instance(random_instance(np.random.default_rng(2), 4, 3))
    deferred = np.array([True, False, False, False])
    alloc = initial_allocation(system, deferred=deferred)
    assert alloc.deferred[0]
    assert not alloc.matrix[0].any()

def test_round_robin_allocation():
    system = LinkSystem.from_instance(random_instance(np.random.default_rng(0), 3, 4,
        u2n_fraction=1.))
    a0 = round_robin_allocation(system, 0)
    assert a0.subchannels(0) == (0, 3)
    assert a0.subchannels(1) == (1,)
    a1 = round_robin_allocation(system, 1)
    assert a1.subchannels(1) == (0, 3)
    assert not a0.matrix.sum(axis=0).max() > 1

@pytest.mark.parametrize('seed', range(8))
def test_branch_and_bound_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    instance = random_instance(rng, int(rng.integers(2, 6)), 3)
    system = LinkSystem.from_instance(instance)
    incumbent = initial_allocation(system)
    log = SearchTreeLog()
    alloc = branch_and_bound(system, incumbent, log=log)
    powers = np.full(len(system), system.p_max)
    served = np.flatnonzero(~alloc.deferred)
    if len(served) == 0:
        return
    assert system.subsystem(served).is_feasible(alloc.matrix[served], powers[served],
        alloc.exempt[served])
    value = system.sum_rate(alloc.matrix, powers)
    assert value >= system.sum_rate(incumbent.matrix, powers) - 1e-6
    sub = SmallInstance.from_system(system.subsystem(served), exempt=alloc.exempt[served])
    _, best = exhaustive_allocation(sub)
    assert value == pytest.approx(best, rel=1e-9)
    assert not alloc.suboptimal
    assert log.nodes == alloc.nodes

def test_branch_and_bound_node_budget():
    rng = np.random.default_rng(4)
    system = LinkSystem.from_instance(random_instance(rng, 5, 4))
    incumbent = initial_allocation(system)
    log = SearchTreeLog()
    alloc = branch_and_bound(system, incumbent, node_budget=1, log=log)
    assert alloc.suboptimal
    assert log.to_dict()['suboptimal']
    powers = np.full(len(system), system.p_max)
    assert system.sum_rate(alloc.matrix, powers) >= \
        system.sum_rate(incumbent.matrix, powers) - 1e-6

def test_search_tree_log_dict():
    system = LinkSystem.from_instance(random_instance(np.random.default_rng(1), 3, 2))
    log = SearchTreeLog()
    branch_and_bound(system, initial_allocation(system), log=log)
    d = log.to_dict()
    assert set(d) == {'nodes', 'pruned', 'forced', 'incumbent_updates', 'suboptimal'}
    assert d['nodes'] >= 1

@pytest.mark.parametrize('seed', range(5))
def test_power_control_against_grid(seed):
    rng = np.random.default_rng(100 + seed)
    instance = random_instance(rng, 3, 2)
    system = LinkSystem.from_instance(instance)
    alloc = branch_and_bound(system, initial_allocation(system))
    result = dc_power_control(system, alloc)
    assert np.all(result.values >= 0) and np.all(result.values <= system.p_max)
    assert np.all(result.values[~alloc.matrix.any(axis=1)] == 0)
    history = np.asarray(result.history)
    assert np.all(np.diff(history) >= -1e-9 * history[:-1])

    dc = system.sum_rate(alloc.matrix, result.values)
    assert dc >= system.sum_rate(alloc.matrix, np.full(3, system.p_max)) * (1 - 1e-9)
    r = system.rates(alloc.matrix, result.values)
    constrained = ~alloc.exempt & alloc.matrix.any(axis=1)
    assert np.all(r[constrained] >= system.r_min * (1 - 1e-9))

    grid_instance = SmallInstance.from_system(system, exempt=alloc.exempt)
    _, grid = grid_power_search(grid_instance, alloc.matrix, resolution=0.02 * system.p_max)
    assert dc >= 0.98 * grid

def test_power_control_infeasible_start():
    instance = SmallInstance(direct=[[1e-16]], cross=[[[0.]]], conflict=[[False]],
        noise=7.2e-16, bandwidth=180e3, r_min=2e5, p_max=0.2)
    system = LinkSystem.from_instance(instance)
    alloc = Allocation(matrix=[[True]], exempt=[False], deferred=[False])
    with pytest.raises(InfeasibleStartError):
        dc_power_control(system, alloc)
    # Exempt links have no rate constraint
    alloc.exempt[0] = True
    assert dc_power_control(system, alloc).values[0] == pytest.approx(0.2)

def test_power_vector_bounds():
    with pytest.raises(ValueError):
        PowerVector([0.1, 0.3], p_max=0.2)
    assert list(PowerVector.full(2, 0.2).values) == [0.2, 0.2]

def test_optimize_slot(bs, params):
    positions = _positions()
    segments = {0: Segment(positions[0], Point3(50., 0., 100.)),
        1: Segment(positions[1], positions[1]),
        2: Segment(positions[2], Point3(250., 40., 90.))}
    context = SlotContext(links=_relay_links(), positions=positions, segments=segments,
        remaining_time={0: 10., 1: 0., 2: 10.}, bs=bs, params=params, n_subchannels=3,
        p_max=0.2, v_max=20., slot_duration=0.1, node_budget=10000)
    decision = optimize_slot(context, r_min=2e5, search_log=True)
    history = np.asarray(decision.objective_history)
    assert np.all(np.diff(history) >= 0)
    assert decision.speeds[1] == 0.
    for uid, v in decision.speeds.items():
        assert 0 <= v <= 20.
    assert not decision.system.has_conflict(decision.allocation.matrix)
    assert len(decision.search_logs) >= 1
    # The reported system is evaluated where the UAVs end the slot
    expected = build_system(context, decision.end_positions, 2e5)
    assert np.allclose(expected.direct, decision.system.direct)

def test_optimize_slot_without_links(bs, params):
    p = Point3(0., 100., 100.)
    context = SlotContext(links=[], positions={0: p}, segments={0: Segment(p, p)},
        remaining_time={0: 0.}, bs=bs, params=params, n_subchannels=2, p_max=0.2, v_max=20.,
        slot_duration=0.1)
    decision = optimize_slot(context, r_min=2e5)
    assert decision.objective_history == [0.]
