# spiralloc/control/safety.py
import math
from dataclasses import dataclass

import numpy as np

from spiralloc.control.fuzzy import SENSE_RANGE, flc_infer
from spiralloc.control.orca import TIME_HORIZON, Disk, orca_constraints, select_velocity
from spiralloc.perception.kalman import forecast
from spiralloc.world.geometry import Circle

PROXY_RADIUS = 2.0
TRACE_COLUMNS = ["t", "d_obs", "dtheta", "flc_v", "flc_w", "n_constraints", "vx", "vy", "limited"]


@dataclass(frozen=True)
class SafetyParams:
    v_max: float = 2.0
    sense_range: float = SENSE_RANGE
    horizon: float = TIME_HORIZON
    anchor_radius: float = 0.3
    dt: float = 0.1


@dataclass(frozen=True)
class SafetyOutcome:
    velocity: np.ndarray
    limited: bool
    flc_v: float
    flc_w: float
    n_constraints: int


def static_obstacle_disk(shape, position):
    """
    Disk standing in for a static obstacle.

    Circles enter exactly; other shapes become a proxy disk tangent to the
    boundary at the point nearest the anchor.
    """
    if isinstance(shape, Circle):
        return Disk(shape.center, (0.0, 0.0), shape.radius)
    distance, closest = shape.distance(position)
    if distance > 0:
        ux, uy = (closest[0] - position[0]) / distance, (closest[1] - position[1]) / distance
    else:
        cx, cy = shape.centroid
        norm = math.hypot(cx - position[0], cy - position[1]) or 1.0
        ux, uy = (cx - position[0]) / norm, (cy - position[1]) / norm
    return Disk((closest[0] + ux * PROXY_RADIUS, closest[1] + uy * PROXY_RADIUS), (0.0, 0.0), PROXY_RADIUS)


def neighbour_disks(world, position, tracks, params):
    """
    ORCA neighbours around the anchor.

    Static obstacles within sensing range enter as disks; dynamic ones enter
    through their Kalman track when any forecast position over the horizon
    comes within sensing range.

    Args:
        world: WorldModel snapshot
        position: Anchor position
        tracks: Mapping obstacle id -> KalmanTrack
        params: SafetyParams

    Returns:
        List of Disk
    """
    disks = []
    if not world.obstacles:
        return disks
    distances = world.obstacle_distances(position)
    for obstacle, distance in zip(world.obstacles, distances):
        if obstacle.is_dynamic:
            track = tracks.get(obstacle.id)
            if track is None:
                continue
            radius = obstacle.shape.bounding_radius
            ahead = [track.position] + forecast(track, params.horizon, 1.0)
            if min(math.dist(position, p) - radius for p in ahead) > params.sense_range:
                continue
            disks.append(Disk(track.position, track.velocity, radius))
        elif distance <= params.sense_range:
            disks.append(static_obstacle_disk(obstacle.shape, position))
    return [d for d in disks if math.dist(d.position, position) > 0.0]


def compose(proposed, flc, constraints, params):
    """
    Chain agent proposal, fuzzy shaping and ORCA projection.

    The proposal's speed is capped by the fuzzy speed and its heading nudged
    by the fuzzy turn rate over one step; ORCA then projects the result.
    ORCA takes precedence over the fuzzy layer, which takes precedence over
    the agent.

    Args:
        proposed: Agent velocity vector
        flc: (speed, turn_rate) or None when no obstacle is sensed
        constraints: ORCA half-planes
        params: SafetyParams

    Returns:
        VelocityCommand
    """
    proposed = np.asarray(proposed, dtype=float)
    speed = float(np.linalg.norm(proposed))
    v_des = proposed
    if flc is not None and speed > 0.0:
        flc_v, flc_w = flc
        heading = math.atan2(proposed[1], proposed[0]) + flc_w * params.dt
        speed = speed * min(1.0, flc_v / speed)
        v_des = np.array([speed * math.cos(heading), speed * math.sin(heading)])
    norm = float(np.linalg.norm(v_des))
    if norm > params.v_max:
        v_des = v_des * (params.v_max / norm)
    return select_velocity(constraints, v_des, params.v_max)


def refine_velocity(world, position, velocity, proposed, d_obs, heading_error, tracks, rules, params):
    """
    Full safety pass for one tick.

    Args:
        world: WorldModel snapshot
        position: Anchor position
        velocity: Current anchor velocity
        proposed: Velocity the agent or planner asks for
        d_obs: Distance to the nearest obstacle (inf when none)
        heading_error: Heading minus bearing to the next waypoint
        tracks: Kalman tracks by obstacle id
        rules: FuzzyRuleBase
        params: SafetyParams

    Returns:
        SafetyOutcome
    """
    flc = None
    if d_obs < params.sense_range:
        flc = flc_infer(rules, d_obs, heading_error)
    agent = Disk(tuple(position), tuple(velocity), params.anchor_radius)
    others = neighbour_disks(world, position, tracks, params)
    constraints = orca_constraints(agent, others, params.horizon, params.sense_range, params.dt)
    command = compose(proposed, flc, constraints, params)
    flc_v, flc_w = flc if flc is not None else (float("nan"), float("nan"))
    return SafetyOutcome(command.velocity, command.limited, flc_v, flc_w, len(constraints))
