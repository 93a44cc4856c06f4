# spiralloc/sim/batch.py
"""Seeded batches of runs, their summary statistics and parameter sweeps."""
import json
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass

import numpy as np
import pandas as pd

from spiralloc.config import build_config, config_to_json
from spiralloc.errors import BatchError, ParameterError, SpiralLocError, UsageError
from spiralloc.locnet.regressor import DistanceRegressor
from spiralloc.logging_config import get_logger
from spiralloc.metrics.report import METRIC_KEYS
from spiralloc.reporting.store import ResultStore
from spiralloc.sim.engine import run_scenario

logger = get_logger("sim.batch")

SUMMARY_KEYS = METRIC_KEYS + [
    "e_total_j", "n_beacons", "detours", "skipped_waypoints", "collisions", "total_reward",
    "heading_change_rad", "abrupt_turns",
]
SWEEP_AXES = ("node_count", "obstacle_density", "field_size")
SWEEP_COLUMNS = ["axis", "value", "metric", "mean", "std"]


@dataclass(frozen=True)
class MetricStats:
    mean: float
    std: float
    min: float
    max: float
    count: int


@dataclass(frozen=True)
class BatchSummary:
    config: dict
    run_count: int
    stats: dict
    runs: tuple

    def to_dict(self):
        return {
            "config": self.config,
            "run_count": self.run_count,
            "metrics": {
                key: None if s is None else {"mean": s.mean, "std": s.std, "min": s.min, "max": s.max,
                                             "count": s.count}
                for key, s in self.stats.items()
            },
            "runs": list(self.runs),
        }


def run_config(config, run_index, vary_seed=True):
    """Config of one run; its seed is seed + run index unless the batch repeats one world."""
    return config.with_overrides(seed=config.seed + run_index) if vary_seed else config


def summarize_runs(config, metric_rows):
    """
    Per-metric statistics over a batch.

    Undefined values (None) are left out of a metric's statistics; a metric
    with no defined value gets None.

    Args:
        config: ScenarioConfig echoed in the summary
        metric_rows: Sequence of (run_index, metrics dict)

    Returns:
        BatchSummary
    """
    ordered = sorted(metric_rows, key=lambda row: row[0])
    stats = {}
    for key in SUMMARY_KEYS:
        values = np.array([float(m[key]) for _, m in ordered if m.get(key) is not None])
        if values.size == 0:
            stats[key] = None
            continue
        stats[key] = MetricStats(float(values.mean()), float(values.std()), float(values.min()),
                                 float(values.max()), int(values.size))
    return BatchSummary(config.model_dump(), len(ordered), stats, tuple(m for _, m in ordered))


def write_run_outputs(store, result):
    k = result.run_index
    store.write_json(f"metrics_run{k}.json", result.metrics.to_dict())
    store.write_frame(f"trace_run{k}.csv", result.trace_frame())
    store.write_frame(f"loc_run{k}.csv", result.localization_frame())
    if result.safety_trace:
        store.write_frame(f"safety_run{k}.csv", result.safety_frame())


def _execute(config_json, run_index, vary_seed, regressor_path, record_safety):
    config = build_config(json.loads(config_json))
    regressor = DistanceRegressor.load(regressor_path) if regressor_path else None
    return run_scenario(run_config(config, run_index, vary_seed), run_index=run_index, regressor=regressor,
                        record_safety=record_safety)


def batch_runs(config, store=None, workers=1, vary_seed=True, regressor_path=None, record_safety=False):
    """
    Run ``config.run_count`` independent runs and summarize them.

    Args:
        config: ScenarioConfig
        store: ResultStore receiving per-run files as runs finish
        workers: Process count; 1 runs in-process
        vary_seed: Derive run seeds as seed + run index; False repeats one world
        regressor_path: Optional distance regressor checkpoint
        record_safety: Keep per-tick safety traces

    Returns:
        BatchSummary

    Raises:
        BatchError: a run failed (runs finished before it are saved)
    """
    if config.run_count < 1:
        raise ParameterError(f"run_count must be >= 1, got {config.run_count}")
    config_json = config_to_json(config)
    rows = []

    def collect(result):
        rows.append((result.run_index, result.metrics.to_dict()))
        if store is not None:
            write_run_outputs(store, result)

    logger.info(f"Batch of {config.run_count} runs from seed {config.seed} on {workers} worker(s)")
    if workers <= 1:
        for k in range(config.run_count):
            try:
                collect(_execute(config_json, k, vary_seed, regressor_path, record_safety))
            except SpiralLocError as e:
                _abort(store, config, rows, k, e)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(_execute, config_json, k, vary_seed, regressor_path, record_safety): k
                for k in range(config.run_count)
            }
            for future in as_completed(futures):
                try:
                    collect(future.result())
                except SpiralLocError as e:
                    for other in futures:
                        other.cancel()
                    _abort(store, config, rows, futures[future], e)

    summary = summarize_runs(config, rows)
    if store is not None:
        store.write_json("summary.json", summary.to_dict())
    return summary


def _abort(store, config, rows, run_index, error):
    logger.error(f"Run {run_index} failed, aborting batch after {len(rows)} completed runs: {error}")
    if store is not None and rows:
        store.write_json("summary_partial.json", summarize_runs(config, rows).to_dict())
    raise BatchError(run_index, error) from error


def axis_overrides(axis, value):
    if axis == "field_size":
        return {"field_width": value, "field_height": value}
    if axis == "node_count":
        return {"node_count": int(value)}
    return {axis: value}


def sweep(config, axis, values, store=None, workers=1, regressor_path=None, record_safety=False):
    """
    One batch per axis value.

    Args:
        config: Base ScenarioConfig
        axis: One of SWEEP_AXES
        values: Non-empty sequence of axis values
        store: ResultStore; each batch writes into ``<axis>=<value>/``
        workers: Process count per batch
        regressor_path: Optional distance regressor checkpoint for every run
        record_safety: Keep per-tick safety traces

    Returns:
        (list of (value, BatchSummary), long-format frame axis,value,metric,mean,std)
    """
    if axis not in SWEEP_AXES:
        raise UsageError(f"invalid sweep axis '{axis}', expected one of {', '.join(SWEEP_AXES)}")
    if not values:
        raise UsageError("sweep needs at least one value")
    summaries = []
    rows = []
    for value in values:
        batch_config = config.with_overrides(**axis_overrides(axis, value))
        sub_store = None
        if store is not None:
            sub_store = ResultStore(store.path(f"{axis}={value}"), config_to_json(batch_config))
            sub_store.write_text("resolved_config.json", config_to_json(batch_config))
        summary = batch_runs(batch_config, sub_store, workers, regressor_path=regressor_path,
                             record_safety=record_safety)
        summaries.append((value, summary))
        for metric in SUMMARY_KEYS:
            s = summary.stats[metric]
            rows.append((axis, value, metric, None if s is None else s.mean, None if s is None else s.std))
    frame = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    if store is not None:
        store.write_frame("sweep.csv", frame)
    return summaries, frame
