# spiralloc/control/orca.py
"""Optimal reciprocal collision avoidance for a single agent.

Half-planes are built from the truncated velocity-obstacle cone of each
neighbour; the agent takes full avoidance responsibility since obstacles do
not cooperate. The velocity closest to the desired one is found with 2D
incremental linear programming, falling back to the least-violating velocity
when the constraints are infeasible.
"""
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from spiralloc.errors import DegenerateInputError, ParameterError

EPSILON = 1e-9
RESPONSIBILITY = 1.0
TIME_HORIZON = 4.0


class Disk(NamedTuple):
    position: tuple
    velocity: tuple
    radius: float


@dataclass(frozen=True)
class OrcaConstraint:
    """Half-plane {v : (v - point) . normal >= 0}."""

    point: np.ndarray
    normal: np.ndarray

    @property
    def direction(self):
        # Permitted side lies to the left of the direction.
        return np.array([self.normal[1], -self.normal[0]])

    def residual(self, velocity):
        return float((np.asarray(velocity, dtype=float) - self.point) @ self.normal)


@dataclass(frozen=True)
class VelocityCommand:
    velocity: np.ndarray
    limited: bool = False


def _det(a, b):
    return a[0] * b[1] - a[1] * b[0]


def _constraint(point, direction):
    direction = direction / np.linalg.norm(direction)
    return OrcaConstraint(np.asarray(point, dtype=float), np.array([-direction[1], direction[0]]))


def orca_constraint(agent, other, horizon=TIME_HORIZON, time_step=0.1):
    """
    Half-plane of velocities avoiding one neighbour within the horizon.

    Args:
        agent: Disk for the anchor
        other: Disk for the neighbour
        horizon: Lookahead in seconds
        time_step: Control step, used to resolve an existing overlap

    Returns:
        OrcaConstraint

    Raises:
        DegenerateInputError: coincident positions
    """
    rel_pos = np.asarray(other.position, dtype=float) - np.asarray(agent.position, dtype=float)
    rel_vel = np.asarray(agent.velocity, dtype=float) - np.asarray(other.velocity, dtype=float)
    dist_sq = float(rel_pos @ rel_pos)
    if dist_sq <= 0.0:
        raise DegenerateInputError(f"coincident positions at {tuple(agent.position)}")
    combined = agent.radius + other.radius
    combined_sq = combined ** 2
    inv_horizon = 1.0 / horizon

    if dist_sq > combined_sq:
        w = rel_vel - inv_horizon * rel_pos
        w_len_sq = float(w @ w)
        dot1 = float(w @ rel_pos)
        if dot1 < 0.0 and dot1 ** 2 > combined_sq * w_len_sq:
            # Project onto the cut-off circle.
            w_len = math.sqrt(w_len_sq)
            unit_w = w / w_len
            direction = np.array([unit_w[1], -unit_w[0]])
            u = (combined * inv_horizon - w_len) * unit_w
        else:
            # Project onto a leg of the cone.
            leg = math.sqrt(dist_sq - combined_sq)
            if _det(rel_pos, w) > 0.0:
                direction = np.array([rel_pos[0] * leg - rel_pos[1] * combined,
                                      rel_pos[0] * combined + rel_pos[1] * leg]) / dist_sq
            else:
                direction = -np.array([rel_pos[0] * leg + rel_pos[1] * combined,
                                       -rel_pos[0] * combined + rel_pos[1] * leg]) / dist_sq
            u = float(rel_vel @ direction) * direction - rel_vel
    else:
        inv_step = 1.0 / time_step
        w = rel_vel - inv_step * rel_pos
        w_len = float(np.linalg.norm(w))
        unit_w = w / w_len
        direction = np.array([unit_w[1], -unit_w[0]])
        u = (combined * inv_step - w_len) * unit_w

    point = np.asarray(agent.velocity, dtype=float) + RESPONSIBILITY * u
    return _constraint(point, direction)


def orca_constraints(agent, others, horizon=TIME_HORIZON, sense_range=None, time_step=0.1):
    """
    One half-plane per neighbour within sensing range.

    Args:
        agent: Disk for the anchor
        others: Iterable of Disk (obstacle proxies, forecast tracks)
        horizon: Lookahead Δ_t in seconds, > 0
        sense_range: Neighbours whose boundary is farther are ignored; None keeps all
        time_step: Control step

    Returns:
        List of OrcaConstraint
    """
    if not horizon > 0:
        raise ParameterError(f"ORCA horizon must be > 0, got {horizon}")
    constraints = []
    for other in others:
        gap = math.dist(agent.position, other.position) - other.radius
        if sense_range is not None and gap > sense_range:
            continue
        constraints.append(orca_constraint(agent, other, horizon, time_step))
    return constraints


def linear_program1(lines, line_no, radius, opt_velocity, direction_opt):
    """Optimise along one line subject to the previous lines and the speed disk."""
    line = lines[line_no]
    dot = float(line.point @ line.direction)
    discriminant = dot ** 2 + radius ** 2 - float(line.point @ line.point)
    if discriminant < 0.0:
        return False, None
    root = math.sqrt(discriminant)
    t_left, t_right = -dot - root, -dot + root

    for i in range(line_no):
        denominator = _det(line.direction, lines[i].direction)
        numerator = _det(lines[i].direction, line.point - lines[i].point)
        if abs(denominator) <= EPSILON:
            if numerator < 0.0:
                return False, None
            continue
        t = numerator / denominator
        if denominator >= 0.0:
            t_right = min(t_right, t)
        else:
            t_left = max(t_left, t)
        if t_left > t_right:
            return False, None

    if direction_opt:
        t = t_right if float(opt_velocity @ line.direction) > 0.0 else t_left
    else:
        t = float(line.direction @ (opt_velocity - line.point))
        t = min(max(t, t_left), t_right)
    return True, line.point + t * line.direction


def linear_program2(lines, radius, opt_velocity, direction_opt):
    """
    Incremental 2D LP over half-planes and the speed disk.

    Returns:
        (index of the first failing line or len(lines), result)
    """
    opt_velocity = np.asarray(opt_velocity, dtype=float)
    if direction_opt:
        result = opt_velocity * radius
    elif float(opt_velocity @ opt_velocity) > radius ** 2:
        result = opt_velocity / np.linalg.norm(opt_velocity) * radius
    else:
        result = opt_velocity.copy()

    for i, line in enumerate(lines):
        if _det(line.direction, line.point - result) > 0.0:
            ok, candidate = linear_program1(lines, i, radius, opt_velocity, direction_opt)
            if not ok:
                return i, result
            result = candidate
    return len(lines), result


def linear_program3(lines, begin_line, radius, result):
    """Minimise the maximum violation once linear_program2 has failed at begin_line."""
    distance = 0.0
    for i in range(begin_line, len(lines)):
        line_i = lines[i]
        if _det(line_i.direction, line_i.point - result) > distance:
            projected = []
            for j in range(i):
                line_j = lines[j]
                determinant = _det(line_i.direction, line_j.direction)
                if abs(determinant) <= EPSILON:
                    if float(line_i.direction @ line_j.direction) > 0.0:
                        continue
                    point = 0.5 * (line_i.point + line_j.point)
                else:
                    point = line_i.point + (_det(line_j.direction, line_i.point - line_j.point) / determinant) * line_i.direction
                projected.append(_constraint(point, line_j.direction - line_i.direction))
            opt = np.array([-line_i.direction[1], line_i.direction[0]])
            failed, candidate = linear_program2(projected, radius, opt, True)
            if failed >= len(projected):
                result = candidate
            distance = _det(line_i.direction, line_i.point - result)
    return result


def select_velocity(constraints, v_des, v_max):
    """
    Feasible velocity nearest to the desired one.

    Args:
        constraints: Sequence of OrcaConstraint
        v_des: Desired velocity, |v_des| <= v_max
        v_max: Speed limit

    Returns:
        VelocityCommand; ``limited`` is set when v_des had to be changed because the set was infeasible
    """
    v_des = np.asarray(v_des, dtype=float)
    lines = list(constraints)
    failed, result = linear_program2(lines, v_max, v_des, False)
    limited = False
    if failed < len(lines):
        result = linear_program3(lines, failed, v_max, result)
        limited = True
    speed = float(np.linalg.norm(result))
    if speed > v_max:
        result = result * (v_max / speed)
    return VelocityCommand(result, limited)
