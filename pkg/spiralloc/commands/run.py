# spiralloc/commands/run.py
import argparse

from spiralloc.commands.common import add_scenario_arguments, config_schema, open_store, resolve_from_args
from spiralloc.locnet.regressor import DistanceRegressor
from spiralloc.logging_config import get_logger
from spiralloc.planning.spiral import write_plan_csv
from spiralloc.sim.batch import write_run_outputs
from spiralloc.sim.engine import run_scenario

logger = get_logger("commands.run")


def run_command(args):
    """Execute one scenario and write its metrics, trace, localization table and plan."""
    extra = []
    if args.policy:
        extra.append(f"policy={args.policy}")
    if args.weights:
        extra.append(f"weights_path={args.weights}")
    config = resolve_from_args(args, extra)
    store = open_store(args, config)
    regressor = DistanceRegressor.load(args.regressor) if args.regressor else None
    result = run_scenario(config, regressor=regressor, record_safety=args.safety_trace)
    write_run_outputs(store, result)
    write_plan_csv(result.plan, store.path("plan.csv"))
    metrics = result.metrics
    logger.info(f"Coverage {metrics.coverage_pct:.1f}%, RMSE {metrics.rmse_m}, eta_traj {metrics.eta_traj}, "
                f"{metrics.detours} detours, {metrics.collisions} collisions")
    return 0


def register_run_command(subparsers):
    parser = subparsers.add_parser(
        "run", help="Run one scenario", epilog=config_schema(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    add_scenario_arguments(parser)
    parser.add_argument("--policy", choices=["heuristic", "td3"], help="Detour policy")
    parser.add_argument("--weights", help="TD3 policy checkpoint")
    parser.add_argument("--regressor", help="Distance regressor checkpoint")
    parser.add_argument("--safety-trace", action="store_true", help="Write the per-tick safety trace")
    parser.set_defaults(handler=run_command)
