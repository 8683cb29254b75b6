import math
import pytest
import numpy as np

from coopuav.geometry import Point3, distance, crown_contains
from coopuav.sensing import SensingModel, SensingTask, TaskState, success_probability, \
    feasible_radius, feasible_region, best_sensing_point, expected_sensing_slots, record_sensing
from coopuav.pylab.errors import InfeasibleTaskError, OutOfRegionError


def _task(tol=0.5, volume=1e6, slots=2, center=Point3(0., 0., 0.)):
    return SensingTask(id='a', center=center, failure_tolerance=tol, data_volume=volume,
        sense_slots_required=slots)

def test_feasible_radius(model):
    assert feasible_radius(model, 0.5) == pytest.approx(math.log(2) / 0.005)
    # Capped for very loose tolerances
    assert feasible_radius(model, 1 - 1e-12) == model.max_radius

def test_success_probability_at_crown_edge(model):
    task = _task(tol=0.3)
    r = feasible_radius(model, 0.3)
    p = success_probability(model, Point3(0., 0., r), task)
    assert 1 - p == pytest.approx(0.3)

def test_best_sensing_point(model):
    task = _task()
    p = best_sensing_point(model, task)
    assert (p.x, p.y, p.z) == pytest.approx((0., 0., model.min_altitude))

def test_infeasible_task(model):
    # radius ln(1/0.9)/0.005 = 21 m < 50 m minimum altitude
    with pytest.raises(InfeasibleTaskError):
        feasible_region(model, _task(tol=0.1))

def test_expected_sensing_slots(model):
    task = _task(slots=3)
    uav = Point3(0., 0., 100.)
    assert expected_sensing_slots(model, uav, task) == pytest.approx(3 / math.exp(-0.5))

def test_task_validation():
    with pytest.raises(ValueError):
        _task(tol=1.)
    with pytest.raises(ValueError):
        _task(volume=-1.)
    with pytest.raises(ValueError):
        _task(slots=0)

def test_record_sensing_needs_active(model, rng):
    task = _task()
    with pytest.raises(ValueError):
        record_sensing(task, Point3(0., 0., 60.), model, rng)

def test_record_sensing_out_of_region(model, rng):
    task = _task()
    task.activate()
    with pytest.raises(OutOfRegionError):
        record_sensing(task, Point3(0., 0., 300.), model, rng)

def test_record_sensing_progress(model):
    task = _task(volume=1e6, slots=4)
    task.activate()
    rng = np.random.default_rng(0)
    uav = Point3(0., 0., model.min_altitude)
    while task.state == TaskState.ACTIVE:
        before = task.collected
        record_sensing(task, uav, model, rng)
        assert task.collected >= before
        assert task.collected == pytest.approx(1e6 * task.slots_sensed / 4)
    assert task.state == TaskState.SENSED
    assert task.collected == 1e6

def test_sensing_success_rate(model):
    task = _task(slots=10 ** 6)
    task.activate()
    rng = np.random.default_rng(5)
    uav = Point3(0., 0., 100.)
    n = 20000
    for _ in range(n):
        record_sensing(task, uav, model, rng)
    assert task.slots_sensed / n == pytest.approx(math.exp(-0.5), abs=0.015)

def test_zero_volume_goes_straight_to_delivered(model):
    task = _task(volume=0., slots=1)
    task.activate()
    rng = np.random.default_rng(0)
    while task.state == TaskState.ACTIVE:
        record_sensing(task, Point3(0., 0., 50.), model, rng)
    assert task.state == TaskState.DELIVERED

def test_deliver_and_backlog():
    task = _task(volume=100., slots=1)
    task.activate()
    task.slots_sensed = 1
    task.collected = 100.
    task.state = TaskState.SENSED
    assert task.deliver(30.) == 30.
    assert task.backlog == pytest.approx(70.)
    assert task.deliver(1000.) == pytest.approx(70.)
    assert task.state == TaskState.DELIVERED
    assert task.backlog == 0.
    assert task.deliver(5.) == 0.

def test_states_do_not_go_back():
    task = _task()
    task.activate()
    task.state = TaskState.SENSED
    with pytest.raises(ValueError):
        task._move_to(TaskState.ACTIVE)
    with pytest.raises(ValueError):
        task.deliver(-1.)
