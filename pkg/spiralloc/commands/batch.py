# spiralloc/commands/batch.py
import argparse

from spiralloc.commands.common import add_scenario_arguments, config_schema, open_store, resolve_from_args
from spiralloc.logging_config import get_logger
from spiralloc.sim.batch import batch_runs

logger = get_logger("commands.batch")


def batch_command(args):
    config = resolve_from_args(args)
    store = open_store(args, config)
    summary = batch_runs(config, store, workers=args.workers, vary_seed=not args.same_world,
                         regressor_path=args.regressor, record_safety=args.safety_trace)
    for key in ("rmse_m", "coverage_pct", "eta_traj"):
        stats = summary.stats.get(key)
        if stats is not None:
            logger.info(f"{key}: mean {stats.mean:.4g}, std {stats.std:.4g} over {stats.count} runs")
    return 0


def register_batch_command(subparsers):
    parser = subparsers.add_parser(
        "batch", help="Run run_count seeded runs and summarize them", epilog=config_schema(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    add_scenario_arguments(parser)
    parser.add_argument("--workers", type=int, default=1, help="Worker processes (default: 1)")
    parser.add_argument("--same-world", action="store_true", help="Repeat the root seed in every run")
    parser.add_argument("--regressor", help="Distance regressor checkpoint")
    parser.add_argument("--safety-trace", action="store_true", help="Write per-run safety traces")
    parser.set_defaults(handler=batch_command)
