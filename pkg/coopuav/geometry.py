'''Spatial types of the cell and kinematics on straight trajectory segments.

The cell uses a flat Cartesian frame in meters; `z` is the altitude above the
ground plane. All functions here are pure.
'''
import math
import numpy as np
from dataclasses import dataclass

# Typing
from typing import Tuple, Union

from .pylab.errors import UndefinedAngleError, OffSegmentError

# Positions within this distance of a segment count as on it
SEGMENT_TOLERANCE = 1e-6
# Slack of the closed crown membership test, absorbs projection round-off
CROWN_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Point3:
    '''A point of the cell (meters)
    '''
    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ('x', 'y', 'z'):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError('`{}` ({}) must be finite'.format(name, v))
            object.__setattr__(self, name, float(v))

    def asarray(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, a: Union[np.ndarray, Tuple[float, float, float]]) -> 'Point3':
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def __str__(self):
        return '({:.2f}, {:.2f}, {:.2f})'.format(self.x, self.y, self.z)


@dataclass(frozen=True)
class Segment:
    '''Straight trajectory piece from `start` to `end`. A segment with
    `start == end` is a hover.
    '''
    start: Point3
    end: Point3

    @property
    def length(self) -> float:
        return distance(self.start, self.end)

    @property
    def is_hover(self) -> bool:
        return self.length == 0

    def point_at(self, s: float) -> Point3:
        '''Point at arc length `s` from the start, clamped to the segment
        '''
        length = self.length
        if length == 0 or s <= 0:
            return self.start
        if s >= length:
            return self.end
        a = self.start.asarray()
        return Point3.from_array(a + (self.end.asarray() - a) * (s / length))

    def locate(self, p: Point3) -> Tuple[float, float]:
        '''Arc length of the projection of `p` on the segment and the distance
        from `p` to that projection
        '''
        length = self.length
        if length == 0:
            return 0., distance(p, self.start)
        a = self.start.asarray()
        d = (self.end.asarray() - a) / length
        s = float(np.clip(np.dot(p.asarray() - a, d), 0, length))
        return s, distance(p, self.point_at(s))

    def remaining(self, p: Point3) -> float:
        '''Distance left to `end` from the projection of `p`
        '''
        s, _ = self.locate(p)
        return self.length - s


@dataclass(frozen=True)
class SphericalCrown:
    '''Ball of radius `radius` around `center`, cut by the plane
    z = `min_altitude`. Membership uses closed conditions.
    '''
    center: Point3
    radius: float
    min_altitude: float

    def __post_init__(self):
        if not (self.radius >= 0 and math.isfinite(self.radius)):
            raise ValueError('`radius` ({}) must be finite and >= 0'.format(self.radius))

    @property
    def is_empty(self) -> bool:
        return self.center.z + self.radius < self.min_altitude

    @property
    def apex(self) -> Point3:
        return Point3(self.center.x, self.center.y, self.center.z + self.radius)

    def contains(self, p: Point3) -> bool:
        return crown_contains(self, p)

    def nearest_to_center(self) -> Point3:
        '''Member of the crown closest to its center
        '''
        return self.project(self.center)

    def project(self, p: Point3) -> Point3:
        '''Euclidean projection of `p` onto the crown
        '''
        return Point3.from_array(self.project_array(p.asarray()))

    def project_array(self, p: np.ndarray) -> np.ndarray:
        '''Projection onto the intersection of the ball and the half-space
        z >= min_altitude. If neither single-set projection lands in the
        crown, the answer lies on the circle where the two boundaries meet.
        '''
        c = self.center.asarray()
        r = self.radius
        h = self.min_altitude
        if self.is_empty:
            raise ValueError('Cannot project onto an empty crown')
        v = p - c
        n = np.linalg.norm(v)
        if n <= r and p[2] >= h:
            return p.copy()

        # Ball projection
        q = p.copy() if n <= r else c + v * (r / n)
        if q[2] >= h - CROWN_TOLERANCE:
            q[2] = max(q[2], h)
            return q

        # Half-space projection
        q = p.copy()
        q[2] = h
        if np.linalg.norm(q - c) <= r:
            return q

        # Boundary circle at z = h
        rho = math.sqrt(max(r ** 2 - (h - c[2]) ** 2, 0.))
        horiz = p[:2] - c[:2]
        hn = np.linalg.norm(horiz)
        direction = horiz / hn if hn > 0 else np.array([1., 0.])
        q = np.array([c[0] + rho * direction[0], c[1] + rho * direction[1], h])
        return q

    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        c = self.center.asarray()
        low = c - self.radius
        low[2] = max(low[2], self.min_altitude)
        return low, c + self.radius

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        '''Draw `n` members uniformly by rejection from the bounding box
        '''
        if self.is_empty:
            raise ValueError('Cannot sample an empty crown')
        low, high = self.bounding_box()
        out = []
        for _ in range(50):
            cand = rng.uniform(low, high, size=(4 * n, 3))
            ok = (np.linalg.norm(cand - self.center.asarray(), axis=1) <= self.radius) & \
                (cand[:, 2] >= self.min_altitude)
            out.extend(cand[ok])
            if len(out) >= n:
                break
        # Thin crowns: fall back to projected box points
        while len(out) < n:
            out.append(self.project_array(rng.uniform(low, high)))
        return np.asarray(out[:n])


def distance(a: Point3, b: Point3) -> float:
    '''Euclidean distance in meters
    '''
    return math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.z - b.z) ** 2)

def horizontal_distance(a: Point3, b: Point3) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)

def elevation_angle(ground: Point3, air: Point3) -> float:
    '''Elevation of `air` seen from `ground`, in degrees in (0, 90]

    Raises
    ------
    UndefinedAngleError
        If `air` is not above `ground`
    '''
    dz = air.z - ground.z
    horiz = horizontal_distance(ground, air)
    if dz <= 0:
        raise UndefinedAngleError('Elevation undefined: air point {} is not above ground ' \
            'point {}'.format(air, ground))
    return math.degrees(math.atan2(dz, horiz))

def crown_contains(c: SphericalCrown, p: Point3) -> bool:
    '''True iff `p` is within the radius of the crown and not below its
    minimum altitude
    '''
    return distance(p, c.center) <= c.radius + CROWN_TOLERANCE and \
        p.z >= c.min_altitude - CROWN_TOLERANCE

def advance(position: Point3, segment: Segment, speed: float, dt: float) -> Point3:
    '''Move along `segment` toward its end for `dt` seconds at `speed`.

    The result is recomputed from the arc length on the segment, so positions
    do not drift off the segment over many slots. The move is clamped at
    `segment.end`.

    Raises
    ------
    OffSegmentError
        If `position` is farther than `SEGMENT_TOLERANCE` from the segment
    '''
    if speed < 0:
        raise ValueError('`speed` ({}) must be >= 0'.format(speed))
    if dt < 0:
        raise ValueError('`dt` ({}) must be >= 0'.format(dt))
    s, off = segment.locate(position)
    if off > SEGMENT_TOLERANCE:
        raise OffSegmentError('Position {} is {:.3e} m off the segment {} -> {}'.format(
            position, off, segment.start, segment.end))
    if speed == 0:
        return position
    return segment.point_at(s + speed * dt)
