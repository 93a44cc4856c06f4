# spiralloc/sim/engine.py
"""Closed-loop simulation of one coverage pass."""
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from spiralloc.agent.behaviour import ANCHOR_RADIUS, D_TH, EPS_WP, RewardWeights, compute_reward, mark_waypoint_cleared
from spiralloc.agent.policy import DetourContext, HeuristicPolicy, Td3Policy
from spiralloc.agent.state import AnchorPose, StateHistory, observe
from spiralloc.agent.td3 import PolicyBundle
from spiralloc.control.fuzzy import SENSE_RANGE, load_rule_base
from spiralloc.control.safety import TRACE_COLUMNS, SafetyParams, refine_velocity
from spiralloc.errors import ConfigurationError
from spiralloc.locnet.graph import build_graph, flood_hops
from spiralloc.locnet.pipeline import LOCALIZATION_COLUMNS, BeaconLog, localize_network
from spiralloc.logging_config import get_logger
from spiralloc.metrics.coverage import CoverageTracker
from spiralloc.metrics.energy import ANCHOR, EnergyLedger
from spiralloc.metrics.report import MetricsReport, coverage, energy_metrics, path_smoothness, rmse, trajectory_efficiency
from spiralloc.perception.kalman import ObstacleTracker
from spiralloc.planning.spiral import SpiralParams, generate_spiral
from spiralloc.sim.rng import make_rng
from spiralloc.world.model import build_world, step_dynamic_obstacles

logger = get_logger("sim.engine")

TRACE_HEADER = ["t", "x", "y", "heading", "speed", "mode"]
ARRIVAL_TOL = 1e-9
ANGLE_TOL = 1e-6
SPIRAL, DETOUR, RESUME = "spiral", "detour", "resume"


@dataclass(frozen=True)
class EngineParams:
    d_th: float = D_TH
    eps_wp: float = EPS_WP
    anchor_radius: float = ANCHOR_RADIUS
    sense_range: float = SENSE_RANGE
    reward_interval: float = 1.0
    waypoint_timeout: float = 30.0
    timeout_factor: float = 6.0
    measurement_sigma: float = 0.5
    weights: RewardWeights = RewardWeights()


@dataclass(frozen=True)
class RunResult:
    metrics: MetricsReport
    trace: tuple
    rewards: tuple
    detours: int
    skipped_waypoints: int
    collisions: int
    contact_stops: int
    run_index: int = 0
    safety_trace: tuple = ()
    localization: Optional[object] = field(default=None, compare=False, repr=False)
    plan: Optional[object] = field(default=None, compare=False, repr=False)
    wall_time: float = field(default=0.0, compare=False)

    def trace_frame(self):
        return pd.DataFrame(list(self.trace), columns=TRACE_HEADER)

    def safety_frame(self):
        return pd.DataFrame(list(self.safety_trace), columns=TRACE_COLUMNS)

    def localization_frame(self):
        rows = []
        for r in self.localization.rows:
            est = r.estimate if r.estimate is not None else (None, None)
            rows.append((r.node_id, r.true_position[0], r.true_position[1], est[0], est[1],
                         r.anchors_used, r.residual_rms, r.status))
        return pd.DataFrame(rows, columns=LOCALIZATION_COLUMNS)


def make_policy(config):
    """Evaluation policy named by the config."""
    if config.policy == "heuristic":
        return HeuristicPolicy()
    if not config.weights_path:
        return Td3Policy(None)
    return Td3Policy(PolicyBundle.load(config.weights_path))


class Simulation:
    """
    One run: spiral following, detours, safety filtering, beaconing and the
    end-of-run localization pass.

    Each tick steps dynamic obstacles, updates their Kalman tracks, observes,
    lets the policy act while an obstacle is within d_th, passes the proposal
    through the fuzzy/ORCA safety layer and moves the anchor. Arriving at a
    waypoint broadcasts a beacon that floods the network.
    """

    def __init__(self, config, policy, world, run_index=0, params=EngineParams(), regressor=None,
                 record_safety=False, keep_pair_samples=False):
        self.config = config
        self.policy = policy
        self.world = world
        self.run_index = run_index
        self.params = params
        self.regressor = regressor
        self.record_safety = record_safety
        self.keep_pair_samples = keep_pair_samples
        self.rules = load_rule_base(sense_range=params.sense_range, v_max=config.anchor_speed)
        self.safety = SafetyParams(v_max=config.anchor_speed, sense_range=params.sense_range,
                                   anchor_radius=params.anchor_radius, dt=config.dt)
        self.plan = generate_spiral(SpiralParams(world.field, config.spiral_step, config.anchor_speed,
                                                 config.comm_range))
        if world.in_obstacle(self.plan.waypoints[0].position):
            raise ConfigurationError(f"spiral start {self.plan.waypoints[0].position} lies inside an obstacle")
        self.graph = build_graph(world.node_positions, config.comm_range)
        self.ledger = EnergyLedger(config.node_count, config.energy_initial, config.energy_tx, config.energy_move)
        self.coverage = CoverageTracker(len(world.nodes))
        self.beacons = BeaconLog.empty()
        self.tracker = ObstacleTracker()
        self.noise_rng = make_rng(config.seed, "perception")
        self.history = StateHistory()
        self.policy.reset()

        start = self.plan.waypoints[0].position
        self.pose = AnchorPose(start, 0.0, 0.0)
        self.clock = 0.0
        self.length = 0.0
        self.cursor = 0
        self.target_since = 0.0
        self.mode = SPIRAL
        self.detours = 0
        self.skipped = 0
        self.collisions = 0
        self.contact_stops = 0
        self.in_contact = False
        self.headings = []
        self.trace = []
        self.safety_rows = []
        self.rewards = []
        self.total_reward = 0.0
        self.next_reward = params.reward_interval
        self.newly_covered = 0

    # Waypoints and beacons

    def _broadcast(self):
        position = self.pose.position
        self.ledger.record_tx(ANCHOR, self.config.beacon_bits, self.clock)
        flood = flood_hops(self.graph, position,
                           relay=lambda n: self.ledger.record_tx(n, self.config.beacon_bits, self.clock))
        self.newly_covered += self.coverage.receive_beacon(position, flood.hops)
        self.beacons.append(position, self.clock, flood.hops, self.graph.within_range(position))

    def _timeout(self, index):
        waypoints = self.plan.waypoints
        if index == 0:
            return self.params.waypoint_timeout
        segment = math.dist(waypoints[index - 1].position, waypoints[index].position) / self.config.anchor_speed
        return max(self.params.waypoint_timeout, self.params.timeout_factor * segment)

    def _advance_cursor(self):
        waypoints = self.plan.waypoints
        while self.cursor < len(waypoints):
            waypoint = waypoints[self.cursor]
            if (waypoint.clipped and self.cursor > 0
                    and waypoint.position == waypoints[self.cursor - 1].position):
                self._skip("duplicates its predecessor")
                continue
            if self.clock - self.target_since > self._timeout(self.cursor):
                self._skip(f"not reached within {self._timeout(self.cursor):.0f} s")
                continue
            eps = ARRIVAL_TOL if self.mode == SPIRAL else self.params.eps_wp
            update = mark_waypoint_cleared(self.cursor, self.pose.position, self.plan, self.world, eps)
            if update.outcome is None:
                return
            if update.outcome == "skipped":
                self.skipped += 1
            else:
                self._broadcast()
                if self.mode == RESUME:
                    self.mode = SPIRAL
            self.cursor = update.cursor
            self.target_since = self.clock

    def _skip(self, reason):
        logger.debug(f"Waypoint {self.cursor} skipped at t={self.clock:.1f}: {reason}")
        self.skipped += 1
        self.cursor += 1
        self.target_since = self.clock

    # Reward

    def _reward_tick(self, done=False):
        spent = self.ledger.node_spent_j()
        if sum(spent) > 0:
            running = self.coverage.running_rmse(self.world.node_positions) / self.config.comm_range
            value = compute_reward(self.newly_covered / len(spent), spent, running, self.params.weights)
        else:
            value = 0.0
        self.newly_covered = 0
        self.rewards.append((self.clock, value))
        self.total_reward += value
        self.policy.reward(value, done)

    # Motion

    def _step_obstacles(self, elapsed):
        if not self.world.has_dynamic_obstacles:
            return {}
        if elapsed > 0:
            self.world = self.world.with_obstacles(step_dynamic_obstacles(self.world.obstacles, elapsed,
                                                                          self.world.field))
        detections = {}
        for obstacle in self.world.obstacles:
            if obstacle.is_dynamic and math.dist(obstacle.position, self.pose.position) <= self.params.sense_range:
                noise = self.noise_rng.normal(0.0, self.params.measurement_sigma, size=2)
                detections[obstacle.id] = (obstacle.position[0] + noise[0], obstacle.position[1] + noise[1])
        return self.tracker.step(self.clock, elapsed, detections)

    def _update_mode(self, d_obs):
        if d_obs <= self.params.d_th:
            if self.mode != DETOUR:
                self.detours += 1
                logger.debug(f"Detour {self.detours} at t={self.clock:.1f}, d_obs {d_obs:.2f} m")
            self.mode = DETOUR
        elif self.mode == DETOUR:
            self.mode = RESUME
            self.policy.end_detour()

    def _tick(self, elapsed):
        cfg = self.config
        tracks = self._step_obstacles(elapsed)
        state = observe(self.world, self.pose, self.plan, self.cursor, self.params.sense_range)
        self.history.push(state.features(self.world.field, cfg.anchor_speed, self.params.sense_range))
        self._update_mode(state.d_obs)

        pos = np.asarray(self.pose.position, dtype=float)
        target = np.asarray(self.plan.waypoints[self.cursor].position, dtype=float)
        to_target = target - pos
        remaining = float(np.linalg.norm(to_target))
        current_velocity = self.pose.speed * np.array([math.cos(self.pose.heading), math.sin(self.pose.heading)])

        action = None
        heading = self.pose.heading
        before = None
        if self.mode == DETOUR:
            before = self.history.array()
            action = self.policy.act(DetourContext(state, before, self.world, self.pose.heading, cfg.dt))
            speed = min(max(self.pose.speed + action.dv, 0.0), cfg.anchor_speed)
            heading = self.pose.heading + action.dtheta
            proposed = speed * np.array([math.cos(heading), math.sin(heading)])
        else:
            proposed = cfg.anchor_speed * to_target / remaining

        outcome = refine_velocity(self.world, self.pose.position, current_velocity, proposed, state.d_obs,
                                  state.heading_error, tracks, self.rules, self.safety)
        velocity = outcome.velocity
        v_norm = float(np.linalg.norm(velocity))
        tick_time = cfg.dt
        new_pos = None
        if self.mode != DETOUR:
            cross = velocity[0] * to_target[1] - velocity[1] * to_target[0]
            aligned = v_norm > 0 and abs(cross) <= ANGLE_TOL * v_norm * remaining and velocity @ to_target > 0
            if aligned and v_norm * cfg.dt >= remaining - ARRIVAL_TOL:
                new_pos = target
                tick_time = remaining / v_norm
            elif not aligned and self.mode == SPIRAL:
                # Deflected by the safety layer: arrival falls back to eps_wp.
                self.mode = RESUME
        if new_pos is None:
            new_pos = np.asarray(self.world.field.clamp(tuple(pos + velocity * cfg.dt)), dtype=float)

        if self.world.obstacles:
            d_now = float(self.world.obstacle_distances(pos).min())
            d_new = float(self.world.obstacle_distances(new_pos).min())
            if d_new < self.params.anchor_radius and d_new < d_now:
                self.contact_stops += 1
                logger.debug(f"Contact guard refused a move at t={self.clock:.1f}")
                new_pos = pos

        delta = new_pos - pos
        moved = float(np.linalg.norm(delta))
        if moved > 0:
            heading = math.atan2(delta[1], delta[0])
            self.headings.append(heading)
        self.ledger.record_move(moved, self.clock)
        self.length += moved
        self.clock += tick_time
        self.pose = AnchorPose((float(new_pos[0]), float(new_pos[1])), heading, moved / tick_time)

        if self.world.obstacles:
            touching = float(self.world.obstacle_distances(new_pos).min()) < self.params.anchor_radius
            if touching and not self.in_contact:
                self.collisions += 1
                logger.warning(f"Collision at t={self.clock:.1f} near {self.pose.position}")
            self.in_contact = touching

        self.trace.append((self.clock, self.pose.position[0], self.pose.position[1], heading, self.pose.speed,
                           self.mode))
        if self.record_safety:
            self.safety_rows.append((self.clock, state.d_obs, state.heading_error, outcome.flc_v, outcome.flc_w,
                                     outcome.n_constraints, float(velocity[0]), float(velocity[1]),
                                     bool(outcome.limited)))
        if action is not None:
            after = observe(self.world, self.pose, self.plan, self.cursor, self.params.sense_range)
            features = after.features(self.world.field, cfg.anchor_speed, self.params.sense_range)
            self.policy.record(before, action.to_unit(cfg.dt), np.vstack([before[1:], features]))
        if self.clock >= self.next_reward:
            self._reward_tick()
            self.next_reward += self.params.reward_interval
        return tick_time

    def run(self):
        """
        Run until every waypoint is cleared or skipped, or the time cap is hit.

        Returns:
            RunResult
        """
        started = time.perf_counter()
        cap = self.config.time_cap_factor * self.plan.ideal_time
        incomplete = False
        elapsed = 0.0
        self.trace.append((0.0, self.pose.position[0], self.pose.position[1], self.pose.heading, 0.0, self.mode))
        while True:
            self._advance_cursor()
            if self.cursor >= len(self.plan.waypoints):
                break
            if self.clock >= cap:
                incomplete = True
                logger.warning(f"Run {self.run_index} hit the time cap at t={self.clock:.1f} s "
                               f"with {len(self.plan.waypoints) - self.cursor} waypoints left")
                break
            elapsed = self._tick(elapsed)
        if not self.rewards or self.clock > self.rewards[-1][0]:
            self._reward_tick(done=True)

        localization = localize_network(
            self.beacons, self.graph, self.world.node_positions, self.world.field.diagonal,
            self.config.hop_model, self.regressor, make_rng(self.config.seed, "regressor"),
            keep_samples=self.keep_pair_samples,
        )
        metrics = self._metrics(localization, incomplete)
        wall = time.perf_counter() - started
        logger.info(f"Run {self.run_index} (seed {self.config.seed}): {len(self.beacons)} beacons, "
                    f"coverage {metrics.coverage_pct:.1f}%, RMSE {metrics.rmse_m}, {wall:.1f} s")
        return RunResult(metrics, tuple(self.trace), tuple(self.rewards), self.detours, self.skipped,
                         self.collisions, self.contact_stops, self.run_index, tuple(self.safety_rows),
                         localization, self.plan, wall)

    def _metrics(self, localization, incomplete):
        localized = [r for r in localization.rows if r.status == "localized"]
        error = rmse([r.true_position for r in localized], [r.estimate for r in localized])
        e_norm, eer = energy_metrics(self.ledger)
        heading_change, abrupt = path_smoothness(self.headings)
        n_total = len(self.world.nodes)
        return MetricsReport(
            rmse_m=error,
            e_norm_j=e_norm,
            eer=eer,
            coverage_pct=coverage(self.coverage.n_covered, n_total) if n_total else 0.0,
            eta_traj=trajectory_efficiency(self.plan.ideal_length, self.plan.ideal_time, self.length, self.clock),
            l_actual_m=self.length,
            t_actual_s=self.clock,
            n_cov=self.coverage.n_covered,
            n_total=n_total,
            seed=self.config.seed,
            e_total_j=self.ledger.total_j,
            n_beacons=self.ledger.beacons,
            incomplete=incomplete,
            detours=self.detours,
            skipped_waypoints=self.skipped,
            collisions=self.collisions,
            total_reward=self.total_reward,
            heading_change_rad=heading_change,
            abrupt_turns=abrupt,
        )


def run_scenario(config, policy=None, world=None, run_index=0, regressor=None, record_safety=False,
                 params=EngineParams(), keep_pair_samples=False):
    """
    Execute one run.

    Args:
        config: ScenarioConfig (its seed fixes world and perception noise)
        policy: Detour policy; defaults to the one the config names
        world: WorldModel; built from the config when omitted
        run_index: Index reported in logs and results
        regressor: Pre-trained DistanceRegressor
        record_safety: Keep the per-tick safety trace
        params: EngineParams
        keep_pair_samples: Keep anchor-pair regressor samples on the localization outcome

    Returns:
        RunResult
    """
    if policy is None:
        policy = make_policy(config)
    if world is None:
        world = build_world(config)
    return Simulation(config, policy, world, run_index, params, regressor, record_safety,
                      keep_pair_samples).run()
