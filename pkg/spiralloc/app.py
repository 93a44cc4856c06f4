# spiralloc/app.py
import argparse
import sys

from dotenv import load_dotenv

from spiralloc import __version__
from spiralloc.commands.batch import register_batch_command
from spiralloc.commands.report import register_report_command
from spiralloc.commands.run import register_run_command
from spiralloc.commands.sweep import register_sweep_command
from spiralloc.commands.train import register_train_command
from spiralloc.errors import SpiralLocError, UsageError
from spiralloc.logging_config import configure_logging, get_logger

logger = get_logger("app")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spiralloc",
        description="Mobile-anchor spiral coverage and range-free localization simulator",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="Log level (default: LOG_LEVEL or INFO)")
    parser.add_argument("--log-file", default=None, help="Also log to this file")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="{run,batch,train,sweep,report}")

    register_run_command(subparsers)
    register_batch_command(subparsers)
    register_train_command(subparsers)
    register_sweep_command(subparsers)
    register_report_command(subparsers)
    return parser


def parse_args(argv=None):
    """Strict parsing; argparse exits with status 2 on usage errors."""
    return build_parser().parse_args(argv)


def main(argv=None):
    load_dotenv()
    try:
        args = parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    configure_logging(level=args.log_level, log_file=args.log_file)
    try:
        return args.handler(args)
    except UsageError as e:
        logger.error(f"Usage error: {e}")
        return EXIT_USAGE
    except SpiralLocError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
