# spiralloc/world/geometry.py
"""Obstacle shapes and the field rectangle."""
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import shapely
from shapely.geometry import LineString, Point
from shapely.geometry import Polygon as ShapelyPolygon
from shapely.ops import nearest_points

from spiralloc.errors import ParameterError


@dataclass(frozen=True)
class Field:
    width: float
    height: float
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ParameterError(f"field dimensions must be positive, got {self.width}x{self.height}")

    @property
    def area(self):
        return self.width * self.height

    @property
    def diagonal(self):
        return math.hypot(self.width, self.height)

    @property
    def center(self):
        return (self.origin[0] + self.width / 2.0, self.origin[1] + self.height / 2.0)

    @property
    def bounds(self):
        x0, y0 = self.origin
        return (x0, y0, x0 + self.width, y0 + self.height)

    @property
    def corners(self):
        x0, y0, x1, y1 = self.bounds
        return ((x0, y0), (x1, y0), (x1, y1), (x0, y1))

    def contains(self, point, tol=0.0):
        x0, y0, x1, y1 = self.bounds
        return x0 - tol <= point[0] <= x1 + tol and y0 - tol <= point[1] <= y1 + tol

    def clamp(self, point):
        x0, y0, x1, y1 = self.bounds
        return (min(max(point[0], x0), x1), min(max(point[1], y0), y1))


@dataclass(frozen=True)
class Circle:
    center: tuple
    radius: float
    kind = "circle"

    def __post_init__(self):
        if not self.radius > 0:
            raise ParameterError(f"circle radius must be > 0, got {self.radius}")

    @property
    def area(self):
        return math.pi * self.radius ** 2

    @property
    def bounds(self):
        cx, cy = self.center
        r = self.radius
        return (cx - r, cy - r, cx + r, cy + r)

    @property
    def centroid(self):
        return self.center

    @property
    def bounding_radius(self):
        return self.radius

    def contains(self, point):
        return math.hypot(point[0] - self.center[0], point[1] - self.center[1]) <= self.radius

    def distance(self, point):
        """Distance to the boundary (0 inside) and the closest point."""
        dx, dy = point[0] - self.center[0], point[1] - self.center[1]
        norm = math.hypot(dx, dy)
        if norm <= self.radius:
            return 0.0, (float(point[0]), float(point[1]))
        scale = self.radius / norm
        return norm - self.radius, (self.center[0] + dx * scale, self.center[1] + dy * scale)

    def translated(self, dx, dy):
        return replace(self, center=(self.center[0] + dx, self.center[1] + dy))

    def boundary_points(self, count):
        angles = np.linspace(0.0, 2.0 * math.pi, count, endpoint=False)
        return np.column_stack([self.center[0] + self.radius * np.cos(angles),
                                self.center[1] + self.radius * np.sin(angles)])


@dataclass(frozen=True)
class Rectangle:
    min_corner: tuple
    max_corner: tuple
    kind = "rectangle"

    def __post_init__(self):
        if not (self.max_corner[0] > self.min_corner[0] and self.max_corner[1] > self.min_corner[1]):
            raise ParameterError(f"degenerate rectangle {self.min_corner}..{self.max_corner}")

    @property
    def width(self):
        return self.max_corner[0] - self.min_corner[0]

    @property
    def height(self):
        return self.max_corner[1] - self.min_corner[1]

    @property
    def area(self):
        return self.width * self.height

    @property
    def bounds(self):
        return (*self.min_corner, *self.max_corner)

    @property
    def centroid(self):
        return ((self.min_corner[0] + self.max_corner[0]) / 2.0,
                (self.min_corner[1] + self.max_corner[1]) / 2.0)

    @property
    def bounding_radius(self):
        return math.hypot(self.width, self.height) / 2.0

    def contains(self, point):
        return (self.min_corner[0] <= point[0] <= self.max_corner[0]
                and self.min_corner[1] <= point[1] <= self.max_corner[1])

    def distance(self, point):
        qx = min(max(point[0], self.min_corner[0]), self.max_corner[0])
        qy = min(max(point[1], self.min_corner[1]), self.max_corner[1])
        return math.hypot(point[0] - qx, point[1] - qy), (qx, qy)

    def translated(self, dx, dy):
        return Rectangle((self.min_corner[0] + dx, self.min_corner[1] + dy),
                         (self.max_corner[0] + dx, self.max_corner[1] + dy))

    def boundary_points(self, count):
        return _ring_points(self.to_shapely(), count)

    def to_shapely(self):
        return shapely.box(*self.bounds)


@dataclass(frozen=True)
class Polygon:
    vertices: tuple
    kind = "polygon"
    _geometry: Optional[ShapelyPolygon] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if len(self.vertices) < 3:
            raise ParameterError("polygon needs at least 3 vertices")
        geometry = ShapelyPolygon(self.vertices)
        if not geometry.is_valid or geometry.area <= 0:
            raise ParameterError("polygon must be simple (non-self-intersecting) with positive area")
        object.__setattr__(self, "_geometry", geometry)

    @property
    def area(self):
        return self._geometry.area

    @property
    def bounds(self):
        return tuple(self._geometry.bounds)

    @property
    def centroid(self):
        c = self._geometry.centroid
        return (c.x, c.y)

    @property
    def bounding_radius(self):
        cx, cy = self.centroid
        return max(math.hypot(x - cx, y - cy) for x, y in self.vertices)

    def contains(self, point):
        return self._geometry.covers(Point(point))

    def distance(self, point):
        p = Point(point)
        if self._geometry.covers(p):
            return 0.0, (float(point[0]), float(point[1]))
        closest = nearest_points(self._geometry.exterior, p)[0]
        return self._geometry.exterior.distance(p), (closest.x, closest.y)

    def translated(self, dx, dy):
        return Polygon(tuple((x + dx, y + dy) for x, y in self.vertices))

    def boundary_points(self, count):
        return _ring_points(self._geometry, count)

    def to_shapely(self):
        return self._geometry


def _ring_points(geometry, count):
    ring = geometry.exterior
    distances = np.linspace(0.0, ring.length, count, endpoint=False)
    return np.array([(pt.x, pt.y) for pt in (ring.interpolate(d) for d in distances)])


def shapes_overlap(a, b):
    """True when two shapes share interior area (touching boundaries do not count)."""
    ax0, ay0, ax1, ay1 = a.bounds
    bx0, by0, bx1, by1 = b.bounds
    if ax1 <= bx0 or bx1 <= ax0 or ay1 <= by0 or by1 <= ay0:
        return False
    if isinstance(a, Circle) and isinstance(b, Circle):
        gap = math.hypot(a.center[0] - b.center[0], a.center[1] - b.center[1])
        return gap < a.radius + b.radius
    if isinstance(a, Circle):
        return b.distance(a.center)[0] < a.radius
    if isinstance(b, Circle):
        return a.distance(b.center)[0] < b.radius
    if isinstance(a, Rectangle) and isinstance(b, Rectangle):
        return True
    return a.to_shapely().overlaps(b.to_shapely()) or a.to_shapely().within(b.to_shapely()) \
        or b.to_shapely().within(a.to_shapely())


def polygon_ray_hit(polygon, origin, direction, reach, half_width):
    """Distance along a swept corridor until it meets a polygon, or None."""
    end = (origin[0] + direction[0] * reach, origin[1] + direction[1] * reach)
    ray = LineString([origin, end])
    corridor = ray.buffer(half_width, cap_style="flat") if half_width > 0 else ray
    hit = corridor.intersection(polygon.to_shapely())
    if hit.is_empty:
        return None
    return Point(origin).distance(hit)


def wrap_angle(angle):
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi
