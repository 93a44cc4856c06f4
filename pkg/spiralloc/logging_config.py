# spiralloc/logging_config.py
import logging
import logging.handlers
import os
import re

from rich.console import Console
from rich.highlighter import RegexHighlighter
from rich.logging import RichHandler
from rich.theme import Theme


class SimHighlighter(RegexHighlighter):
    """Highlights seeds, run ids and metric names in log messages."""

    base_style = "spiralloc."
    highlights = [
        r"(?P<run_id>[0-9a-f]{8}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{12})",
        r"(?P<seed>seed[= ]\d+)",
        r"(?P<metric>\b(rmse_m|e_norm_j|eer|coverage_pct|eta_traj)\b)",
        r"(?P<phase>Batch of|Run \d+|Episode \d+|Checkpoint written|Training finished)",
    ]


custom_theme = Theme({
    "info": "green",
    "warning": "yellow",
    "error": "bold red",
    "debug": "cyan",
    "spiralloc.run_id": "bright_magenta",
    "spiralloc.seed": "bright_yellow",
    "spiralloc.metric": "bright_green",
    "spiralloc.phase": "bright_blue",
})


class SimLogFormatter(logging.Formatter):
    """Formatter for the file handler, adding component and source location."""

    def format(self, record):
        record.component = f"[{record.name}]"
        source_info = ""
        if getattr(record, "pathname", None):
            source_info = f"({os.path.basename(record.pathname)}:{record.lineno})"
        record.source_info = source_info
        return super().format(record)


def configure_logging(level=None, log_file=None):
    """
    Configure logging with Rich formatting for the terminal
    and plain formatting for log files.

    Args:
        level: The log level (DEBUG, INFO, WARNING, ERROR, CRITICAL); defaults to LOG_LEVEL or INFO
        log_file: Optional path to a log file

    Returns:
        The configured root logger
    """
    env_level = level or os.environ.get("LOG_LEVEL", "INFO")
    numeric_level = getattr(logging, str(env_level).upper(), logging.INFO)

    root_logger = logging.getLogger()
    root_logger.setLevel(numeric_level)

    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    console = Console(theme=custom_theme, highlighter=SimHighlighter(), stderr=True)
    rich_handler = RichHandler(
        console=console,
        show_time=True,
        show_level=True,
        show_path=True,
        markup=False,
        omit_repeated_times=False,
        rich_tracebacks=True,
        log_time_format="%Y-%m-%d %H:%M:%S",
    )
    rich_handler.setFormatter(logging.Formatter("%(message)s"))
    rich_handler.setLevel(numeric_level)
    root_logger.addHandler(rich_handler)

    if log_file:
        log_dir = os.path.dirname(log_file)
        if log_dir and not os.path.exists(log_dir):
            os.makedirs(log_dir)

        file_format = "%(asctime)s | %(levelname)s %(component)s | %(message)s %(source_info)s"
        file_handler = logging.handlers.RotatingFileHandler(
            log_file,
            maxBytes=10 * 1024 * 1024,  # 10 MB
            backupCount=5,
            encoding="utf-8",
        )
        file_handler.setFormatter(SimLogFormatter(file_format))
        file_handler.setLevel(numeric_level)
        root_logger.addHandler(file_handler)

    app_logger = logging.getLogger("spiralloc")
    app_logger.setLevel(numeric_level)
    app_logger.debug(f"Logging configured with level {env_level}")

    return root_logger


def get_logger(name):
    """
    Get a logger under the package namespace.

    Args:
        name: Dotted component name, with or without the ``spiralloc.`` prefix

    Returns:
        A logger instance
    """
    if not re.match(r"^spiralloc(\.|$)", name):
        name = f"spiralloc.{name}"
    return logging.getLogger(name)
