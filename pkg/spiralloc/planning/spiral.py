# spiralloc/planning/spiral.py
"""Square-spiral coverage trajectory."""
import math
from dataclasses import dataclass
from typing import Optional

import pandas as pd

from spiralloc.errors import ParameterError
from spiralloc.logging_config import get_logger

logger = get_logger("planning.spiral")

# Right, up, left, down.
DIRECTIONS = ((1, 0), (0, 1), (-1, 0), (0, -1))
HEADINGS = (0.0, math.pi / 2, math.pi, 3 * math.pi / 2)
PLAN_COLUMNS = ["index", "x", "y", "heading", "segment_k"]


@dataclass(frozen=True)
class SpiralParams:
    field: object
    step: float
    anchor_speed: float
    comm_range: float
    start: Optional[tuple] = None

    def __post_init__(self):
        if not self.step > 0:
            raise ParameterError(f"spiral step must be > 0, got {self.step}")
        if not self.anchor_speed > 0:
            raise ParameterError(f"anchor speed must be > 0, got {self.anchor_speed}")
        if not self.comm_range > 0:
            raise ParameterError(f"comm range must be > 0, got {self.comm_range}")
        if self.start is None:
            object.__setattr__(self, "start", self.field.center)
        elif not self.field.contains(self.start):
            raise ParameterError(f"spiral start {self.start} lies outside the field")


@dataclass(frozen=True)
class Waypoint:
    index: int
    position: tuple
    heading: float
    segment: int
    raw_position: tuple
    clipped: bool = False
    beacon: bool = True


@dataclass(frozen=True)
class TrajectoryPlan:
    waypoints: tuple
    ideal_length: float
    ideal_time: float
    step: float

    def __len__(self):
        return len(self.waypoints)


def _corner_gap(corner, box):
    x0, y0, x1, y1 = box
    dx = max(x0 - corner[0], 0.0, corner[0] - x1)
    dy = max(y0 - corner[1], 0.0, corner[1] - y1)
    return math.hypot(dx, dy)


def _covers_field(box, field, slack):
    return all(_corner_gap(corner, box) <= slack + 1e-9 for corner in field.corners)


def generate_spiral(params):
    """
    Generate the square-spiral waypoint sequence.

    Segments cycle right, up, left, down; segment i has length k·Δs with
    k = i // 2 + 1, sampled every Δs. Generation stops after the first
    complete segment at which every field corner lies within R − Δs of the
    spiral's bounding box. Waypoints outside the field are clipped to the
    boundary and flagged.

    Args:
        params: SpiralParams

    Returns:
        TrajectoryPlan
    """
    step = params.step
    slack = max(params.comm_range - step, 0.0)
    x, y = params.start
    raw = [(x, y, HEADINGS[0], 1)]
    box = [x, y, x, y]

    segment = 0
    while not _covers_field(box, params.field, slack):
        k = segment // 2 + 1
        dx, dy = DIRECTIONS[segment % 4]
        heading = HEADINGS[segment % 4]
        for _ in range(k):
            x, y = x + dx * step, y + dy * step
            raw.append((x, y, heading, k))
        box = [min(box[0], x), min(box[1], y), max(box[2], x), max(box[3], y)]
        segment += 1

    waypoints = []
    for index, (rx, ry, heading, k) in enumerate(raw):
        position = params.field.clamp((rx, ry))
        waypoints.append(Waypoint(index, position, heading, k, (rx, ry), position != (rx, ry)))

    length = sum(
        math.dist(a.position, b.position) for a, b in zip(waypoints, waypoints[1:])
    )
    clipped = sum(w.clipped for w in waypoints)
    logger.debug(f"Spiral with {len(waypoints)} waypoints over {segment} segments, {clipped} clipped, L_ideal {length:.1f} m")
    return TrajectoryPlan(tuple(waypoints), length, length / params.anchor_speed, step)


def ideal_metrics(plan, anchor_speed=None):
    """
    Ideal path length and travel time of a plan.

    Args:
        plan: TrajectoryPlan
        anchor_speed: Optional speed overriding the one the plan was built with

    Returns:
        (L_ideal, T_ideal)
    """
    if len(plan.waypoints) < 2:
        return 0.0, 0.0
    if anchor_speed is None:
        return plan.ideal_length, plan.ideal_time
    return plan.ideal_length, plan.ideal_length / anchor_speed


def next_waypoint(plan, cursor):
    """
    Waypoint at a cursor and the advanced cursor.

    Returns:
        (waypoint, cursor + 1), or (None, cursor) once exhausted
    """
    if cursor < 0:
        raise ParameterError(f"cursor must be >= 0, got {cursor}")
    if cursor >= len(plan.waypoints):
        return None, cursor
    return plan.waypoints[cursor], cursor + 1


def plan_to_frame(plan):
    return pd.DataFrame(
        [(w.index, w.position[0], w.position[1], w.heading, w.segment) for w in plan.waypoints],
        columns=PLAN_COLUMNS,
    )


def write_plan_csv(plan, path):
    plan_to_frame(plan).to_csv(path, index=False)
