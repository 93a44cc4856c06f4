# spiralloc/agent/behaviour.py
"""Reward, deterministic detour rule and waypoint bookkeeping of the anchor agent."""
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from spiralloc.agent.state import A_MAX, THETA_MAX, AgentAction
from spiralloc.errors import DegenerateInputError, ParameterError
from spiralloc.logging_config import get_logger
from spiralloc.world.geometry import wrap_angle

logger = get_logger("agent.behaviour")

D_TH = 5.0
EPS_WP = 0.5
ANCHOR_RADIUS = 0.3
WAYPOINT_MARGIN = 0.2

LEFT = 1
RIGHT = -1


@dataclass(frozen=True)
class RewardWeights:
    coverage: float = 1.0
    balance: float = 0.5
    accuracy: float = 0.2

    def __post_init__(self):
        for name in ("coverage", "balance", "accuracy"):
            if getattr(self, name) < 0:
                raise ParameterError(f"reward weight {name} must be >= 0, got {getattr(self, name)}")


def compute_reward(delta_coverage, energies, rmse_loc, weights=RewardWeights()):
    """
    R = w1·ΔCoverage − w2·(max E / mean E − 1) − w3·RMSE.

    Args:
        delta_coverage: Fraction of nodes newly covered since the last reward
        energies: Energy consumed per node
        rmse_loc: Running localization error (already normalised by the caller)
        weights: RewardWeights

    Raises:
        DegenerateInputError: empty energies or zero mean energy
    """
    energies = np.asarray(energies, dtype=float)
    if energies.size == 0:
        raise DegenerateInputError("reward needs at least one node energy")
    mean = float(energies.mean())
    if mean <= 0:
        raise DegenerateInputError("reward undefined with zero mean node energy")
    if rmse_loc < 0:
        raise ParameterError(f"rmse must be >= 0, got {rmse_loc}")
    balance = float(energies.max()) / mean - 1.0
    return weights.coverage * delta_coverage - weights.balance * balance - weights.accuracy * rmse_loc


@dataclass(frozen=True)
class DetourParams:
    d_th: float = D_TH
    v_cruise: float = 2.0
    min_speed_fraction: float = 0.2
    probe_angle: float = math.pi / 4
    scan_step: float = math.pi / 12
    lookahead: float = 2.0
    body_radius: float = ANCHOR_RADIUS + WAYPOINT_MARGIN
    dt: float = 0.1
    a_max: float = A_MAX
    theta_max: float = THETA_MAX


def probe_side(world, position, heading, params=DetourParams()):
    """LEFT when the +45° probe sees at least as much room as the −45° one."""
    left = world.clearance(position, heading + params.probe_angle, params.d_th, params.body_radius)
    right = world.clearance(position, heading - params.probe_angle, params.d_th, params.body_radius)
    return LEFT if left >= right - 1e-9 else RIGHT


def heuristic_detour(state, world, heading, side=None, params=DetourParams()):
    """
    Boundary-following detour.

    Inside the threshold the rule picks the side with more clearance (ties
    counter-clockwise), then takes the heading nearest the waypoint bearing,
    scanning toward that side, whose corridor is free for ``lookahead``
    metres. Speed scales with d_obs / d_th. At or beyond the threshold the
    action steers back onto the bearing at cruise speed.

    Args:
        state: AgentState
        world: WorldModel snapshot
        heading: Current anchor heading
        side: Side latched earlier in this detour, or None to probe
        params: DetourParams

    Returns:
        (AgentAction, side); side is None outside the threshold
    """
    bearing = heading - state.heading_error
    if state.d_obs >= params.d_th:
        dtheta = wrap_angle(bearing - heading)
        return AgentAction.clamped(params.v_cruise - state.speed, dtheta, params.dt,
                                   params.a_max, params.theta_max), None

    if side is None:
        side = probe_side(world, state.position, heading, params)
    target = None
    for k in range(int(round(2 * math.pi / params.scan_step))):
        candidate = bearing + side * k * params.scan_step
        if world.clearance(state.position, candidate, params.lookahead, params.body_radius) >= params.lookahead:
            target = candidate
            break
    fraction = min(max(state.d_obs / params.d_th, params.min_speed_fraction), 1.0)
    if target is None:
        return AgentAction.clamped(-state.speed, side * params.theta_max, params.dt,
                                   params.a_max, params.theta_max), side
    return AgentAction.clamped(params.v_cruise * fraction - state.speed, wrap_angle(target - heading),
                               params.dt, params.a_max, params.theta_max), side


class WaypointUpdate(NamedTuple):
    cursor: int
    outcome: Optional[str]


def waypoint_blocked(world, position, clearance=ANCHOR_RADIUS + WAYPOINT_MARGIN):
    """A waypoint inside an obstacle or closer to one than the anchor body allows."""
    nearest = world.nearest_obstacle(position)
    return nearest is not None and nearest.distance < clearance


def mark_waypoint_cleared(cursor, position, plan, world, eps=EPS_WP):
    """
    Advance the waypoint cursor by at most one.

    Args:
        cursor: Index of the next uncleared waypoint
        position: Anchor position
        plan: TrajectoryPlan
        world: WorldModel snapshot
        eps: Arrival tolerance

    Returns:
        WaypointUpdate with outcome "skipped" (blocked waypoint), "cleared"
        (within eps), or None when the cursor stays
    """
    if cursor >= len(plan.waypoints):
        return WaypointUpdate(cursor, None)
    waypoint = plan.waypoints[cursor]
    if waypoint_blocked(world, waypoint.position):
        logger.debug(f"Waypoint {waypoint.index} at {waypoint.position} blocked by an obstacle, skipped")
        return WaypointUpdate(cursor + 1, "skipped")
    if math.dist(position, waypoint.position) <= eps:
        return WaypointUpdate(cursor + 1, "cleared")
    return WaypointUpdate(cursor, None)
