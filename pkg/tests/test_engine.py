# tests/test_engine.py
import math

import numpy as np
import pytest

from spiralloc.agent.policy import HeuristicPolicy
from spiralloc.config import DEFAULT_CONFIG
from spiralloc.errors import ConfigurationError, UsageError
from spiralloc.planning.spiral import ideal_metrics
from spiralloc.sim.engine import TRACE_HEADER, run_scenario
from spiralloc.world.geometry import Circle, Field
from spiralloc.world.model import Obstacle, build_world


@pytest.fixture(scope="module")
def open_run():
    config = DEFAULT_CONFIG.with_overrides(field_width=30.0, field_height=30.0, node_count=40, comm_range=10.0,
                                           obstacle_density=0.0, hop_model="dvhop", seed=7)
    return config, run_scenario(config, record_safety=True)


def step_lengths(result):
    xy = result.trace_frame()[["x", "y"]].to_numpy()
    return np.linalg.norm(np.diff(xy, axis=0), axis=1)


def test_open_field_follows_the_spiral_exactly(open_run):
    _, result = open_run
    metrics = result.metrics
    assert metrics.eta_traj == pytest.approx(1.0, abs=1e-9)
    assert metrics.detours == 0 and metrics.collisions == 0
    assert not metrics.incomplete
    assert set(result.trace_frame()["mode"]) == {"spiral"}


def test_every_cleared_waypoint_sends_one_beacon(open_run):
    _, result = open_run
    metrics = result.metrics
    assert metrics.n_beacons == len(result.plan.waypoints) - metrics.skipped_waypoints


def test_anchor_never_outruns_its_speed(open_run):
    config, result = open_run
    assert step_lengths(result).max() <= config.anchor_speed * config.dt + 1e-9


def test_energy_includes_beacons_and_motion(open_run):
    config, result = open_run
    metrics = result.metrics
    floor = metrics.n_beacons * config.beacon_bits * config.energy_tx + metrics.l_actual_m * config.energy_move
    assert metrics.e_total_j >= floor - 1e-9
    assert metrics.eer * metrics.e_norm_j == pytest.approx(1.0)


def test_open_field_covers_every_node(open_run):
    _, result = open_run
    metrics = result.metrics
    assert metrics.n_cov == metrics.n_total == 40
    assert metrics.coverage_pct == 100.0
    assert metrics.rmse_m is not None and metrics.rmse_m < 10.0
    frame = result.localization_frame()
    assert len(frame) == metrics.n_total


def test_rewards_are_emitted_every_second_with_a_final_tick(open_run):
    _, result = open_run
    times = [t for t, _ in result.rewards]
    assert times == sorted(times)
    assert times[-1] == pytest.approx(result.metrics.t_actual_s)
    assert len(times) >= int(result.metrics.t_actual_s)
    assert sum(r for _, r in result.rewards) == pytest.approx(result.metrics.total_reward)


def test_safety_trace_is_kept_on_request(open_run):
    _, result = open_run
    assert len(result.safety_trace) == len(result.trace) - 1
    assert list(result.trace_frame().columns) == TRACE_HEADER


def test_runs_are_deterministic(small_config):
    a = run_scenario(small_config)
    b = run_scenario(small_config)
    assert a.metrics.to_dict() == b.metrics.to_dict()
    assert a.trace == b.trace


def test_time_cap_marks_the_run_incomplete(small_config):
    result = run_scenario(small_config.with_overrides(time_cap_factor=0.5))
    assert result.metrics.incomplete
    assert result.metrics.t_actual_s >= 0.5 * result.plan.ideal_time
    assert result.metrics.n_beacons < len(result.plan.waypoints)


def test_detours_match_mode_switches_and_keep_clear(obstacle_config):
    result = run_scenario(obstacle_config.with_overrides(seed=11))
    modes = list(result.trace_frame()["mode"])
    entries = sum(1 for before, after in zip(modes, modes[1:]) if after == "detour" and before != "detour")
    assert result.metrics.detours == entries
    config = obstacle_config
    assert step_lengths(result).max() <= config.anchor_speed * config.dt + 1e-9
    world = build_world(obstacle_config.with_overrides(seed=11))
    clearances = [world.obstacle_distances(p).min() for p in result.trace_frame()[["x", "y"]].to_numpy()]
    assert min(clearances) >= 0.3 - 1e-9
    assert result.metrics.collisions == 0


def test_spiral_start_inside_an_obstacle_is_refused(small_config, make_world):
    world = make_world(Field(30.0, 30.0), [Obstacle("core", Circle((15.0, 15.0), 2.0))], [(1.0, 1.0), (5.0, 5.0)])
    with pytest.raises(ConfigurationError, match="inside an obstacle"):
        run_scenario(small_config, HeuristicPolicy(), world)


def test_grid_map_run(small_config, write_grid):
    rows = ["." * 12] * 12
    rows[2] = "..##........"
    rows[3] = "..##........"
    path = write_grid(rows, cell_size=2.5)
    result = run_scenario(small_config.with_overrides(map_path=str(path)))
    assert result.metrics.n_total == small_config.node_count
    assert result.metrics.n_beacons > 0
    assert math.isclose(result.plan.waypoints[0].position[0], 15.0)


def test_td3_without_weights_is_a_usage_error(small_config):
    with pytest.raises(UsageError):
        run_scenario(small_config.with_overrides(policy="td3"))


@pytest.mark.slow
@pytest.mark.parametrize("name", ["open", "blocks", "corridors"])
def test_heuristic_policy_finishes_shipped_maps_without_contact(name):
    config = DEFAULT_CONFIG.with_overrides(map_path=f"builtin:{name}", hop_model="dvhop", seed=3)
    result = run_scenario(config, policy=HeuristicPolicy())
    metrics = result.metrics
    _, ideal_time = ideal_metrics(result.plan)
    assert metrics.collisions == 0
    assert not metrics.incomplete
    assert metrics.n_beacons == len(result.plan.waypoints) - metrics.skipped_waypoints
    assert metrics.t_actual_s <= config.time_cap_factor * ideal_time
