import math
import pytest
import numpy as np

from coopuav.geometry import Point3, Segment, SphericalCrown, distance, horizontal_distance, \
    elevation_angle, crown_contains, advance
from coopuav.pylab.errors import UndefinedAngleError, OffSegmentError


def test_distance():
    assert distance(Point3(0, 0, 0), Point3(3, 4, 12)) == pytest.approx(13.)
    assert horizontal_distance(Point3(0, 0, 0), Point3(3, 4, 12)) == pytest.approx(5.)

def test_point_rejects_nan():
    with pytest.raises(ValueError):
        Point3(float('nan'), 0, 0)

def test_elevation_angle():
    assert elevation_angle(Point3(0, 0, 0), Point3(10, 0, 10)) == pytest.approx(45.)
    assert elevation_angle(Point3(0, 0, 0), Point3(0, 0, 10)) == pytest.approx(90.)

def test_elevation_undefined_when_not_above():
    with pytest.raises(UndefinedAngleError):
        elevation_angle(Point3(0, 0, 10), Point3(5, 0, 10))
    with pytest.raises(UndefinedAngleError):
        elevation_angle(Point3(0, 0, 10), Point3(5, 0, 3))

def test_crown_membership():
    c = SphericalCrown(center=Point3(0, 0, 0), radius=100., min_altitude=50.)
    assert crown_contains(c, Point3(0, 0, 100))
    assert crown_contains(c, Point3(0, 0, 50))
    assert not crown_contains(c, Point3(0, 0, 49))
    assert not crown_contains(c, Point3(90, 0, 60))
    assert not c.is_empty
    assert SphericalCrown(center=Point3(0, 0, 0), radius=40., min_altitude=50.).is_empty

def test_crown_projection():
    c = SphericalCrown(center=Point3(0, 0, 0), radius=100., min_altitude=50.)
    # Center projects onto the cutting plane
    p = c.nearest_to_center()
    assert (p.x, p.y, p.z) == pytest.approx((0, 0, 50))
    # Far above projects onto the sphere
    p = c.project(Point3(0, 0, 500))
    assert (p.x, p.y, p.z) == pytest.approx((0, 0, 100))
    # Far to the side, low: onto the boundary circle
    p = c.project(Point3(500, 0, 0))
    assert p.z == pytest.approx(50)
    assert math.hypot(p.x, p.y) == pytest.approx(math.sqrt(100 ** 2 - 50 ** 2))
    assert crown_contains(c, p)

def test_crown_samples_are_members(rng):
    c = SphericalCrown(center=Point3(10, -5, 0), radius=80., min_altitude=50.)
    pts = c.sample(rng, 200)
    assert pts.shape == (200, 3)
    assert all(crown_contains(c, Point3.from_array(p)) for p in pts)

def test_advance_moves_and_clamps():
    seg = Segment(Point3(0, 0, 100), Point3(100, 0, 100))
    p = advance(seg.start, seg, speed=20., dt=0.5)
    assert (p.x, p.y, p.z) == pytest.approx((10, 0, 100))
    p = advance(p, seg, speed=20., dt=100.)
    assert p == seg.end
    assert advance(p, seg, speed=0., dt=1.) == p

def test_advance_many_slots_stays_on_segment():
    seg = Segment(Point3(0, 0, 60), Point3(123.4, -56.7, 89.1))
    p = seg.start
    for _ in range(1000):
        p = advance(p, seg, speed=0.07, dt=0.1)
    _, off = seg.locate(p)
    assert off < 1e-9
    assert seg.remaining(p) == pytest.approx(seg.length - 7., abs=1e-6)

def test_advance_off_segment():
    seg = Segment(Point3(0, 0, 100), Point3(100, 0, 100))
    with pytest.raises(OffSegmentError):
        advance(Point3(50, 1, 100), seg, speed=1., dt=1.)

def test_hover_segment():
    p = Point3(1, 2, 3)
    seg = Segment(p, p)
    assert seg.is_hover
    assert advance(p, seg, speed=5., dt=1.) == p
