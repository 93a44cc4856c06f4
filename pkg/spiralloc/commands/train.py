# spiralloc/commands/train.py
import argparse

from spiralloc.commands.common import add_scenario_arguments, config_schema, open_store, resolve_from_args
from spiralloc.logging_config import get_logger
from spiralloc.sim.training import CURRICULA, train_loop

logger = get_logger("commands.train")


def train_command(args):
    config = resolve_from_args(args)
    store = open_store(args, config)
    outcome = train_loop(config, args.episodes, store, curriculum=args.curriculum)
    logger.info(f"Training finished after {args.episodes} episodes and {outcome.updates} TD3 updates")
    return 0


def register_train_command(subparsers):
    parser = subparsers.add_parser(
        "train", help="Train the TD3 detour policy and the distance regressor", epilog=config_schema(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    add_scenario_arguments(parser)
    parser.add_argument("--episodes", type=int, default=50, help="Training episodes (default: 50)")
    parser.add_argument("--curriculum", choices=CURRICULA, default="random",
                        help="random: new world each episode; fixed: one world")
    parser.set_defaults(handler=train_command)
