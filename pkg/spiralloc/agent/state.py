# spiralloc/agent/state.py
"""Observation and action types of the anchor agent."""
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from spiralloc.control.fuzzy import SENSE_RANGE
from spiralloc.world.geometry import wrap_angle

HISTORY = 8
STATE_DIM = 5
ACTION_DIM = 2
A_MAX = 1.0
THETA_MAX = math.pi / 4


@dataclass(frozen=True)
class AnchorPose:
    position: tuple
    heading: float
    speed: float


@dataclass(frozen=True)
class AgentState:
    position: tuple
    speed: float
    d_obs: float
    heading_error: float

    def features(self, field, v_max, sense_range=SENSE_RANGE):
        """Network input in [-1, 1]: (x, y, speed, obstacle distance, heading error)."""
        x0, y0, x1, y1 = field.bounds
        raw = np.array([
            2.0 * (self.position[0] - x0) / (x1 - x0) - 1.0,
            2.0 * (self.position[1] - y0) / (y1 - y0) - 1.0,
            2.0 * self.speed / v_max - 1.0,
            2.0 * self.d_obs / sense_range - 1.0,
            self.heading_error / math.pi,
        ])
        return np.clip(raw, -1.0, 1.0)


@dataclass(frozen=True)
class AgentAction:
    dv: float
    dtheta: float

    @classmethod
    def clamped(cls, dv, dtheta, dt, a_max=A_MAX, theta_max=THETA_MAX):
        limit = a_max * dt
        return cls(float(np.clip(dv, -limit, limit)), float(np.clip(dtheta, -theta_max, theta_max)))

    @classmethod
    def from_unit(cls, unit, dt, a_max=A_MAX, theta_max=THETA_MAX):
        """Scale a network output in [-1, 1]^2 to the action clamps."""
        u = np.clip(np.asarray(unit, dtype=float), -1.0, 1.0)
        return cls.clamped(u[0] * a_max * dt, u[1] * theta_max, dt, a_max, theta_max)

    def to_unit(self, dt, a_max=A_MAX, theta_max=THETA_MAX):
        return np.array([self.dv / (a_max * dt), self.dtheta / theta_max])


def observe(world, pose, plan, cursor, sense_range=SENSE_RANGE):
    """
    Agent observation at the current tick.

    Args:
        world: WorldModel snapshot
        pose: AnchorPose
        plan: TrajectoryPlan
        cursor: Index of the next uncleared waypoint
        sense_range: Obstacle distance cap

    Returns:
        AgentState; heading error is 0 once the plan is exhausted
    """
    nearest = world.nearest_obstacle(pose.position)
    d_obs = sense_range if nearest is None else min(max(nearest.distance, 0.0), sense_range)
    heading_error = 0.0
    if cursor < len(plan.waypoints):
        target = plan.waypoints[cursor].position
        dx, dy = target[0] - pose.position[0], target[1] - pose.position[1]
        if dx or dy:
            heading_error = wrap_angle(pose.heading - math.atan2(dy, dx))
    return AgentState(tuple(pose.position), float(pose.speed), float(d_obs), float(heading_error))


class StateHistory:
    """Last ``length`` feature vectors, padded with the first one."""

    def __init__(self, length=HISTORY):
        self.length = length
        self.frames = deque(maxlen=length)

    def push(self, features):
        features = np.asarray(features, dtype=float)
        if not self.frames:
            self.frames.extend([features] * self.length)
        else:
            self.frames.append(features)

    def array(self):
        """Array (length, STATE_DIM), oldest first."""
        return np.stack(self.frames)

    def __len__(self):
        return len(self.frames)
