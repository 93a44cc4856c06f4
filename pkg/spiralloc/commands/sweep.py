# spiralloc/commands/sweep.py
import argparse

from spiralloc.commands.common import add_scenario_arguments, config_schema, open_store, resolve_from_args
from spiralloc.errors import UsageError
from spiralloc.logging_config import get_logger
from spiralloc.sim.batch import SWEEP_AXES, sweep

logger = get_logger("commands.sweep")


def parse_values(text):
    """Comma-separated numbers, e.g. ``0.1,0.2,0.3``."""
    values = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            number = float(item)
        except ValueError as e:
            raise UsageError(f"--values: '{item}' is not a number") from e
        values.append(int(number) if number.is_integer() and "." not in item else number)
    if not values:
        raise UsageError("--values: at least one value is required")
    return values


def sweep_command(args):
    if args.axis not in SWEEP_AXES:
        raise UsageError(f"--axis: invalid axis '{args.axis}', expected one of {', '.join(SWEEP_AXES)}")
    values = parse_values(args.values)
    config = resolve_from_args(args)
    store = open_store(args, config)
    _, frame = sweep(config, args.axis, values, store, workers=args.workers, regressor_path=args.regressor,
                     record_safety=args.safety_trace)
    logger.info(f"Sweep over {args.axis} with {len(values)} values, {len(frame)} rows in sweep.csv")
    return 0


def register_sweep_command(subparsers):
    parser = subparsers.add_parser(
        "sweep", help="One batch per value of a scenario axis", epilog=config_schema(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    add_scenario_arguments(parser)
    parser.add_argument("--axis", required=True, help=f"One of {', '.join(SWEEP_AXES)}")
    parser.add_argument("--values", required=True, help="Comma-separated axis values")
    parser.add_argument("--workers", type=int, default=1, help="Worker processes per batch (default: 1)")
    parser.add_argument("--regressor", help="Distance regressor checkpoint")
    parser.add_argument("--safety-trace", action="store_true", help="Write per-run safety traces")
    parser.set_defaults(handler=sweep_command)
