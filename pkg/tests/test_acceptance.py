# tests/test_acceptance.py
"""Full-scale scenario checks; run with ``pytest -m slow``."""
import json
import statistics
from pathlib import Path

import numpy as np
import pytest

from spiralloc.config import DEFAULT_CONFIG
from spiralloc.locnet.regressor import RegressorSettings, pair_features, predict_distance, train_regressor
from spiralloc.sim.batch import batch_runs
from spiralloc.sim.engine import run_scenario
from spiralloc.sim.training import train_loop

pytestmark = pytest.mark.slow

BASELINE = Path(__file__).parent / "baselines" / "dvhop_rmse.json"
SEEDS = 30
WORKERS = 4
# Allowed slack on the median trends, in metres.
TREND_SLACK = 0.05


def median_of(summary, key):
    values = [run[key] for run in summary.runs if run[key] is not None]
    return statistics.median(values)


def test_obstacle_free_defaults_cover_every_node():
    result = run_scenario(DEFAULT_CONFIG.with_overrides(obstacle_density=0.0, hop_model="dvhop"))
    assert result.metrics.coverage_pct == 100.0
    assert result.metrics.eta_traj == pytest.approx(1.0, abs=1e-9)


def test_obstacle_field_keeps_coverage_high():
    config = DEFAULT_CONFIG.with_overrides(obstacle_density=0.1, hop_model="dvhop", run_count=SEEDS)
    summary = batch_runs(config, workers=WORKERS)
    assert median_of(summary, "coverage_pct") >= 95.0


def test_accuracy_degrades_gracefully_with_obstacles():
    medians = []
    for density in (0.1, 0.2, 0.3, 0.4):
        config = DEFAULT_CONFIG.with_overrides(obstacle_density=density, hop_model="dvhop", run_count=SEEDS)
        medians.append(median_of(batch_runs(config, workers=WORKERS), "rmse_m"))
    assert all(b >= a - TREND_SLACK for a, b in zip(medians, medians[1:])), medians
    assert medians[-1] <= 2.0 * medians[0]


def test_denser_networks_do_not_hurt_accuracy():
    medians = []
    for count in (100, 300, 500):
        config = DEFAULT_CONFIG.with_overrides(node_count=count, hop_model="dvhop", run_count=SEEDS)
        medians.append(median_of(batch_runs(config, workers=WORKERS), "rmse_m"))
    assert all(b <= a + TREND_SLACK for a, b in zip(medians, medians[1:])), medians


def test_dvhop_accuracy_does_not_regress(record_baseline):
    config = DEFAULT_CONFIG.with_overrides(hop_model="dvhop", run_count=SEEDS)
    median = median_of(batch_runs(config, workers=WORKERS), "rmse_m")
    if record_baseline:
        BASELINE.parent.mkdir(parents=True, exist_ok=True)
        BASELINE.write_text(json.dumps({"median_rmse_m": median, "seed": config.seed, "run_count": SEEDS},
                                       indent=2) + "\n")
        return
    if not BASELINE.exists():
        pytest.fail(f"no DV-Hop baseline at {BASELINE}; record it with pytest -m slow --record-baseline")
    recorded = json.loads(BASELINE.read_text())
    assert recorded["seed"] == config.seed and recorded["run_count"] == SEEDS
    assert median <= 1.1 * recorded["median_rmse_m"], (median, recorded)


def test_converged_regressor_tracks_the_hop_product():
    rng = np.random.default_rng(21)

    def uniform(count):
        hops = rng.integers(1, 8, size=count).astype(float)
        sizes = rng.uniform(14.0, 18.0, size=count)
        contexts = np.column_stack([rng.uniform(8, 12, size=count), np.full(count, 10.0), np.zeros(count)])
        truth = hops * sizes * rng.uniform(0.97, 1.03, size=count)
        return hops, sizes, contexts, truth

    hops, sizes, contexts, truth = uniform(3000)
    fit = train_regressor(pair_features(hops, sizes, contexts), truth, np.random.default_rng(3), 150.0,
                          RegressorSettings(epochs=200))
    held = uniform(500)
    predicted = predict_distance(fit.regressor, held[0], held[1], held[2])
    product = held[0] * held[1]
    assert np.median(np.abs(predicted - product) / product) < 0.1


def test_training_on_an_empty_map_does_not_lose_reward():
    gains = []
    for seed in range(5):
        config = DEFAULT_CONFIG.with_overrides(field_width=40.0, field_height=40.0, node_count=40,
                                               obstacle_density=0.0, seed=seed)
        curve = train_loop(config, 50, curriculum="fixed").reward_curve
        gains.append(curve["total_reward"].iloc[1:].mean() - curve["total_reward"].iloc[0])
    assert statistics.median(gains) >= -1e-9
