# spiralloc/commands/report.py
from spiralloc.logging_config import get_logger
from spiralloc.reporting.render import collect_report, render_report
from spiralloc.reporting.store import ResultStore

logger = get_logger("commands.report")


def report_command(args):
    """Print the text report and re-emit its data as report.json in the result directory."""
    report = collect_report(args.directory)
    print(render_report(report), end="")
    ResultStore(args.directory).write_json("report.json", report)
    return 0


def register_report_command(subparsers):
    parser = subparsers.add_parser("report", help="Summarize a batch or sweep result directory")
    parser.add_argument("directory", help="Result directory written by batch or sweep")
    parser.set_defaults(handler=report_command)
