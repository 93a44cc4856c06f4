# spiralloc/commands/common.py
"""Arguments and helpers shared by the scenario-driven commands."""
from pathlib import Path

from spiralloc.config import ScenarioConfig, config_to_json, resolve_config
from spiralloc.errors import ConfigurationError, UsageError
from spiralloc.logging_config import get_logger
from spiralloc.reporting.store import ResultStore

logger = get_logger("commands")


def config_schema():
    """Epilog listing every scenario key with its default."""
    lines = ["scenario keys (flat JSON object or --set key=value):"]
    for name, info in ScenarioConfig.model_fields.items():
        lines.append(f"  {name} = {info.default!r}")
    return "\n".join(lines)


def add_scenario_arguments(parser):
    parser.add_argument("--config", help="Scenario JSON file")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="Override one scenario key (repeatable)")
    parser.add_argument("--seed", type=int, help="Root seed (highest priority)")
    parser.add_argument("--out", default="results", help="Output directory (default: results)")


def resolve_from_args(args, extra=()):
    """
    Scenario config of a command invocation.

    Raises:
        UsageError: missing config file or a bad key/value, naming the flag
    """
    if args.config is not None and not Path(args.config).is_file():
        raise UsageError(f"--config: file not found: {args.config}")
    try:
        return resolve_config(args.config, list(args.overrides) + list(extra), args.seed)
    except ConfigurationError as e:
        flag = "--set" if args.overrides or extra else "--config"
        raise UsageError(f"{flag}: {e}") from e


def open_store(args, config):
    """Output directory holding the resolved config next to the results."""
    config_json = config_to_json(config)
    store = ResultStore(args.out, config_json)
    store.write_text("resolved_config.json", config_json)
    logger.info(f"Writing results to {store.directory} (run id {store.run_id})")
    return store
