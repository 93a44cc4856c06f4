# spiralloc/world/model.py
import math
import dataclasses
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from spiralloc.errors import ConfigurationError
from spiralloc.logging_config import get_logger
from spiralloc.sim.rng import make_rng
from spiralloc.world.geometry import Circle, Field, Polygon, Rectangle, polygon_ray_hit, shapes_overlap
from spiralloc.world.grid import load_grid_map, read_map_source

logger = get_logger("world")

PLACEMENT_ATTEMPTS = 10_000
SIZE_RANGE = (2.0, 10.0)
DYNAMIC_SPEED_RANGE = (0.2, 1.0)
START_KEEP_OUT = 3.0


@dataclass(frozen=True)
class Obstacle:
    id: str
    shape: object
    kind: str = "static"
    velocity: tuple = (0.0, 0.0)

    @property
    def is_dynamic(self):
        return self.kind == "dynamic"

    @property
    def position(self):
        return self.shape.centroid


@dataclass(frozen=True)
class SensorNode:
    id: int
    true_position: tuple
    energy: float
    estimated_position: Optional[tuple] = None


class NearestObstacle(NamedTuple):
    distance: float
    closest_point: tuple
    obstacle_id: str


class _ObstacleIndex:
    """Packed arrays of the analytic shapes for vectorized queries."""

    def __init__(self, obstacles):
        self.count = len(obstacles)
        self.circle_idx = np.array([i for i, o in enumerate(obstacles) if isinstance(o.shape, Circle)], dtype=int)
        self.rect_idx = np.array([i for i, o in enumerate(obstacles) if isinstance(o.shape, Rectangle)], dtype=int)
        self.polygons = [(i, o.shape) for i, o in enumerate(obstacles) if isinstance(o.shape, Polygon)]
        self.centers = np.array([obstacles[i].shape.center for i in self.circle_idx], dtype=float).reshape(-1, 2)
        self.radii = np.array([obstacles[i].shape.radius for i in self.circle_idx], dtype=float)
        self.lo = np.array([obstacles[i].shape.min_corner for i in self.rect_idx], dtype=float).reshape(-1, 2)
        self.hi = np.array([obstacles[i].shape.max_corner for i in self.rect_idx], dtype=float).reshape(-1, 2)

    def distances(self, point):
        p = np.asarray(point, dtype=float)
        out = np.empty(self.count)
        if len(self.circle_idx):
            out[self.circle_idx] = np.maximum(np.linalg.norm(self.centers - p, axis=1) - self.radii, 0.0)
        if len(self.rect_idx):
            q = np.clip(p, self.lo, self.hi)
            out[self.rect_idx] = np.linalg.norm(p - q, axis=1)
        for i, shape in self.polygons:
            out[i] = shape.distance(point)[0]
        return out

    def ray_hits(self, origin, direction, reach, half_width):
        """Per-obstacle distance along the corridor until contact (inf when clear)."""
        o = np.asarray(origin, dtype=float)
        d = np.asarray(direction, dtype=float)
        out = np.full(self.count, np.inf)

        if len(self.circle_idx):
            rho = self.radii + half_width
            f = o - self.centers
            dist_sq = np.einsum("ij,ij->i", f, f)
            inside = dist_sq < rho ** 2
            b = f @ d
            disc = b ** 2 - (dist_sq - rho ** 2)
            t = -b - np.sqrt(np.maximum(disc, 0.0))
            hit = (~inside) & (disc >= 0) & (t >= 0)
            t_circle = np.where(hit, t, np.inf)
            # Inside the inflated disk: blocked only when heading toward the centre.
            t_circle = np.where(inside & (b < 0), 0.0, t_circle)
            out[self.circle_idx] = t_circle

        if len(self.rect_idx):
            lo = self.lo - half_width
            hi = self.hi + half_width
            t_near = np.full(len(self.rect_idx), -np.inf)
            t_far = np.full(len(self.rect_idx), np.inf)
            for axis in range(2):
                if d[axis] == 0.0:
                    within = (lo[:, axis] <= o[axis]) & (o[axis] <= hi[:, axis])
                    t_near = np.where(within, t_near, np.inf)
                    t_far = np.where(within, t_far, -np.inf)
                else:
                    t1 = (lo[:, axis] - o[axis]) / d[axis]
                    t2 = (hi[:, axis] - o[axis]) / d[axis]
                    t_near = np.maximum(t_near, np.minimum(t1, t2))
                    t_far = np.minimum(t_far, np.maximum(t1, t2))
            hit = (t_near <= t_far) & (t_far >= 0)
            inside = hit & (t_near < 0)
            t_rect = np.where(hit & ~inside, t_near, np.inf)
            q = np.clip(o, self.lo, self.hi)
            toward = (q - o) @ d > 0
            t_rect = np.where(inside & toward, 0.0, t_rect)
            out[self.rect_idx] = t_rect

        for i, shape in self.polygons:
            t = polygon_ray_hit(shape, origin, direction, reach, half_width)
            if t is not None:
                out[i] = t
        return out


@dataclass(frozen=True)
class WorldModel:
    """Immutable snapshot of the field, its obstacles and the deployed nodes."""

    field: Field
    obstacles: tuple = ()
    nodes: tuple = ()
    grid: Optional[object] = None
    _index: Optional[_ObstacleIndex] = dataclasses.field(default=None, init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "_index", _ObstacleIndex(self.obstacles))

    def with_obstacles(self, obstacles):
        return replace(self, obstacles=tuple(obstacles))

    @property
    def node_positions(self):
        return np.array([n.true_position for n in self.nodes], dtype=float).reshape(-1, 2)

    @property
    def obstacle_area(self):
        return sum(o.shape.area for o in self.obstacles)

    @property
    def has_dynamic_obstacles(self):
        return any(o.is_dynamic for o in self.obstacles)

    def obstacle_distances(self, point):
        return self._index.distances(point)

    def nearest_obstacle(self, point):
        """
        Nearest obstacle boundary to a point.

        Args:
            point: (x, y) in metres

        Returns:
            NearestObstacle(distance, closest_point, obstacle_id), or None without obstacles
        """
        if not self.obstacles:
            return None
        distances = self._index.distances(point)
        i = int(np.argmin(distances))
        distance, closest = self.obstacles[i].shape.distance(point)
        return NearestObstacle(float(distance), closest, self.obstacles[i].id)

    def in_obstacle(self, point):
        if not self.obstacles:
            return False
        return bool(np.any(self._index.distances(point) <= 0.0))

    def clearance(self, origin, heading, reach, half_width=0.0):
        """
        Free distance along a heading before a corridor of the given half-width touches an obstacle.

        Args:
            origin: Start point
            heading: Direction in radians
            reach: Maximum distance of interest
            half_width: Corridor half-width (the anchor's body radius)

        Returns:
            Distance in [0, reach]
        """
        if not self.obstacles:
            return reach
        direction = (math.cos(heading), math.sin(heading))
        hits = self._index.ray_hits(origin, direction, reach, half_width)
        return float(min(reach, hits.min()))

    def obstacle_by_id(self, obstacle_id):
        for obstacle in self.obstacles:
            if obstacle.id == obstacle_id:
                return obstacle
        raise KeyError(obstacle_id)


def _random_shape(rng, field, target_area=None):
    low, high = SIZE_RANGE
    if rng.random() < 0.5:
        radius = rng.uniform(low, high) / 2.0
        if target_area is not None and math.pi * radius ** 2 > target_area:
            radius = math.sqrt(target_area / math.pi)
        x = rng.uniform(field.bounds[0] + radius, field.bounds[2] - radius)
        y = rng.uniform(field.bounds[1] + radius, field.bounds[3] - radius)
        return Circle((x, y), radius)
    width, height = rng.uniform(low, high), rng.uniform(low, high)
    if target_area is not None and width * height > target_area:
        scale = math.sqrt(target_area / (width * height))
        width, height = width * scale, height * scale
    x = rng.uniform(field.bounds[0], field.bounds[2] - width)
    y = rng.uniform(field.bounds[1], field.bounds[3] - height)
    return Rectangle((x, y), (x + width, y + height))


def generate_random_obstacles(field, density, rng, keep_out=None, dynamic_fraction=0.0):
    """
    Place non-overlapping circles and rectangles until their area reaches the target density.

    Each entity gets a bounded number of placement attempts; the last shape is
    shrunk so the cumulative area lands on the target.

    Args:
        field: Field to fill
        density: Obstacle area fraction in [0, 1)
        rng: numpy Generator
        keep_out: Optional (point, radius) disk no obstacle may touch
        dynamic_fraction: Share of obstacles given a random velocity

    Returns:
        List of Obstacle

    Raises:
        ConfigurationError: density out of range or target unreachable
    """
    if not 0 <= density < 1:
        raise ConfigurationError(f"obstacle density must be in [0, 1), got {density}")
    target = density * field.area
    shapes = []
    total = 0.0
    while target - total > 1e-6 * field.area:
        remaining = target - total
        for _ in range(PLACEMENT_ATTEMPTS):
            shape = _random_shape(rng, field, remaining)
            if keep_out is not None and shape.distance(keep_out[0])[0] < keep_out[1]:
                continue
            if any(shapes_overlap(shape, other) for other in shapes):
                continue
            break
        else:
            logger.error(f"Obstacle placement failed at {total / field.area:.3f} of density {density}")
            raise ConfigurationError(
                f"could not reach obstacle density {density}: placed {total / field.area:.3f} "
                f"after {PLACEMENT_ATTEMPTS} attempts"
            )
        shapes.append(shape)
        total += shape.area

    realised = total / field.area

    dynamic = set()
    if dynamic_fraction > 0 and shapes:
        count = int(round(dynamic_fraction * len(shapes)))
        dynamic = set(int(i) for i in rng.choice(len(shapes), size=count, replace=False))

    obstacles = []
    for i, shape in enumerate(shapes):
        if i in dynamic:
            speed = rng.uniform(*DYNAMIC_SPEED_RANGE)
            angle = rng.uniform(0.0, 2.0 * math.pi)
            obstacles.append(Obstacle(f"obs-{i}", shape, "dynamic", (speed * math.cos(angle), speed * math.sin(angle))))
        else:
            obstacles.append(Obstacle(f"obs-{i}", shape))
    logger.debug(f"Generated {len(obstacles)} obstacles ({len(dynamic)} dynamic), density {realised:.4f}")
    return obstacles


def deploy_nodes(field, obstacles, count, rng, energy):
    """
    Scatter sensor nodes uniformly over the free space.

    Args:
        field: Field
        obstacles: Obstacles to avoid
        count: Number of nodes N
        rng: numpy Generator
        energy: Initial energy per node

    Returns:
        List of SensorNode

    Raises:
        ConfigurationError: rejection budget exhausted
    """
    if count < 1:
        raise ConfigurationError("node count must be >= 1")
    index = _ObstacleIndex(list(obstacles))
    x0, y0, x1, y1 = field.bounds
    nodes = []
    for node_id in range(count):
        for _ in range(PLACEMENT_ATTEMPTS):
            point = (float(rng.uniform(x0, x1)), float(rng.uniform(y0, y1)))
            if index.count == 0 or np.all(index.distances(point) > 0.0):
                nodes.append(SensorNode(node_id, point, energy))
                break
        else:
            raise ConfigurationError(f"could not place node {node_id} in free space after {PLACEMENT_ATTEMPTS} attempts")
    return nodes


def step_dynamic_obstacles(obstacles, dt, field):
    """
    Advance dynamic obstacles by one step, reflecting off the field boundary.

    Args:
        obstacles: Sequence of Obstacle
        dt: Step in seconds
        field: Field whose boundary reflects

    Returns:
        List of Obstacle (static ones are returned unchanged)
    """
    x0, y0, x1, y1 = field.bounds
    stepped = []
    for obstacle in obstacles:
        if not obstacle.is_dynamic:
            stepped.append(obstacle)
            continue
        vx, vy = obstacle.velocity
        shape = obstacle.shape.translated(vx * dt, vy * dt)
        sx0, sy0, sx1, sy1 = shape.bounds
        dx = dy = 0.0
        if sx0 < x0:
            dx, vx = 2.0 * (x0 - sx0), abs(vx)
        elif sx1 > x1:
            dx, vx = -2.0 * (sx1 - x1), -abs(vx)
        if sy0 < y0:
            dy, vy = 2.0 * (y0 - sy0), abs(vy)
        elif sy1 > y1:
            dy, vy = -2.0 * (sy1 - y1), -abs(vy)
        if dx or dy:
            shape = shape.translated(dx, dy)
        stepped.append(replace(obstacle, shape=shape, velocity=(vx, vy)))
    return stepped


def build_world(config):
    """
    Build the world of one run from a scenario config.

    A ``map_path`` replaces random obstacle generation; the field then takes
    the grid's extent. Random streams are keyed by the config seed.

    Args:
        config: ScenarioConfig

    Returns:
        WorldModel
    """
    grid = None
    if config.map_path:
        grid = load_grid_map(read_map_source(config.map_path))
        field = grid.field
        if (field.width, field.height) != (config.field_width, config.field_height):
            logger.info(f"Map {config.map_path} sets the field to {field.width}x{field.height} m")
        obstacles = [
            Obstacle(f"cell-{i}", rect) for i, rect in enumerate(grid.to_rectangles())
        ]
    else:
        field = Field(config.field_width, config.field_height)
        obstacles = generate_random_obstacles(
            field,
            config.obstacle_density,
            make_rng(config.seed, "obstacles"),
            keep_out=(field.center, START_KEEP_OUT),
            dynamic_fraction=config.dynamic_fraction,
        )
    nodes = deploy_nodes(field, obstacles, config.node_count, make_rng(config.seed, "nodes"),
                         config.energy_initial)
    return WorldModel(field, tuple(obstacles), tuple(nodes), grid)
