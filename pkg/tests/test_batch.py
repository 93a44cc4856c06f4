# tests/test_batch.py
import json
import math

import numpy as np
import pytest

from spiralloc.errors import BatchError, ConfigurationError, UsageError
from spiralloc.locnet.regressor import DistanceRegressor
from spiralloc.reporting.store import ResultStore
from spiralloc.sim.batch import SUMMARY_KEYS, axis_overrides, batch_runs, run_config, summarize_runs, sweep


@pytest.fixture
def tiny_config(small_config):
    return small_config.with_overrides(field_width=20.0, field_height=20.0, node_count=25)


def test_run_seeds_follow_the_run_index(tiny_config):
    assert run_config(tiny_config, 3).seed == tiny_config.seed + 3
    assert run_config(tiny_config, 3, vary_seed=False).seed == tiny_config.seed


def test_single_run_has_zero_spread(tiny_config):
    summary = batch_runs(tiny_config.with_overrides(run_count=1))
    assert summary.run_count == 1
    assert summary.stats["coverage_pct"].std == 0.0
    assert summary.stats["coverage_pct"].mean == summary.runs[0]["coverage_pct"]


def test_repeated_world_has_zero_spread(tiny_config):
    summary = batch_runs(tiny_config, vary_seed=False)
    for key in SUMMARY_KEYS:
        stats = summary.stats[key]
        if stats is not None:
            assert stats.std == pytest.approx(0.0, abs=1e-12), key


def test_batch_writes_per_run_files(tiny_config, tmp_path):
    store = ResultStore(tmp_path / "batch")
    summary = batch_runs(tiny_config, store)
    for k in range(tiny_config.run_count):
        assert (tmp_path / "batch" / f"metrics_run{k}.json").exists()
        assert (tmp_path / "batch" / f"trace_run{k}.csv").exists()
        assert (tmp_path / "batch" / f"loc_run{k}.csv").exists()
    written = json.loads((tmp_path / "batch" / "summary.json").read_text())
    assert written["run_count"] == summary.run_count == 2
    seeds = [run["seed"] for run in written["runs"]]
    assert seeds == [tiny_config.seed, tiny_config.seed + 1]


def test_summary_ignores_order_and_undefined_values(tiny_config):
    rows = [
        (1, {"rmse_m": None, "coverage_pct": 40.0}),
        (0, {"rmse_m": 2.0, "coverage_pct": 60.0}),
    ]
    forward = summarize_runs(tiny_config, rows)
    backward = summarize_runs(tiny_config, list(reversed(rows)))
    assert forward.to_dict() == backward.to_dict()
    assert forward.stats["rmse_m"].count == 1
    assert forward.stats["rmse_m"].std == 0.0
    assert forward.stats["coverage_pct"].mean == 50.0
    assert forward.stats["coverage_pct"].std == pytest.approx(10.0)
    assert forward.stats["eer"] is None
    assert forward.runs[0]["coverage_pct"] == 60.0


def test_failed_run_aborts_the_batch(tiny_config, write_grid, tmp_path):
    rows = ["." * 8] * 8
    rows[3] = rows[4] = "...##..."
    path = write_grid(rows, cell_size=2.5)
    with pytest.raises(BatchError) as raised:
        batch_runs(tiny_config.with_overrides(map_path=str(path)), ResultStore(tmp_path / "failed"))
    assert raised.value.run_index == 0
    assert isinstance(raised.value.__cause__, ConfigurationError)
    assert not (tmp_path / "failed" / "summary.json").exists()


def test_field_size_axis_sets_both_sides():
    assert axis_overrides("field_size", 50.0) == {"field_width": 50.0, "field_height": 50.0}
    assert axis_overrides("node_count", 60.0) == {"node_count": 60}


def test_sweep_reports_one_row_per_value_and_metric(tiny_config, tmp_path):
    config = tiny_config.with_overrides(run_count=1)
    summaries, frame = sweep(config, "node_count", [15, 25], ResultStore(tmp_path / "sweep"))
    assert [value for value, _ in summaries] == [15, 25]
    assert len(frame) == 2 * len(SUMMARY_KEYS)
    assert set(frame["axis"]) == {"node_count"}
    assert summaries[0][1].stats["n_total"].mean == 15
    assert (tmp_path / "sweep" / "sweep.csv").exists()
    assert (tmp_path / "sweep" / "node_count=25" / "summary.json").exists()


def test_sweep_rejects_unknown_axes(tiny_config):
    with pytest.raises(UsageError):
        sweep(tiny_config, "anchor_speed", [1.0])
    with pytest.raises(UsageError):
        sweep(tiny_config, "node_count", [])


def test_single_value_sweep_matches_a_batch(tiny_config):
    config = tiny_config.with_overrides(run_count=1)
    summaries, _ = sweep(config, "obstacle_density", [0.05])
    direct = batch_runs(config.with_overrides(obstacle_density=0.05))
    assert summaries[0][1].to_dict() == direct.to_dict()


def test_sweep_forwards_the_regressor_and_safety_trace(tiny_config, tmp_path):
    regressor = DistanceRegressor(np.random.default_rng(5), 20.0 * math.sqrt(2))
    regressor.trained = True
    checkpoint = tmp_path / "regressor.ckpt"
    regressor.save(checkpoint)
    config = tiny_config.with_overrides(run_count=1)

    summaries, _ = sweep(config, "node_count", [25], ResultStore(tmp_path / "sweep"),
                         regressor_path=str(checkpoint), record_safety=True)
    direct = batch_runs(config, regressor_path=str(checkpoint))
    plain = batch_runs(config)
    assert summaries[0][1].to_dict() == direct.to_dict()
    assert summaries[0][1].runs[0]["rmse_m"] != plain.runs[0]["rmse_m"]
    assert (tmp_path / "sweep" / "node_count=25" / "safety_run0.csv").exists()
