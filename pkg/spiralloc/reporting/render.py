# spiralloc/reporting/render.py
"""Human-readable summaries of batch and sweep result directories."""
import importlib.resources
import json
from pathlib import Path

import jinja2
import pandas as pd
from tabulate import tabulate

from spiralloc.errors import ReportError
from spiralloc.logging_config import get_logger
from spiralloc.reporting.store import clean_number

logger = get_logger("reporting.render")

template_env = jinja2.Environment(
    loader=jinja2.FunctionLoader(lambda name:
        importlib.resources.read_text("spiralloc.reporting.templates", name)
    ),
    keep_trailing_newline=True,
)

STAT_HEADERS = ["metric", "mean", "std", "min", "max", "count"]


def _read_summary(path):
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ReportError(f"unreadable summary ({e})", [path]) from e
    if not isinstance(document, dict) or not isinstance(document.get("metrics"), dict):
        raise ReportError("summary without a metrics table", [path])
    return document


def _stat_rows(document):
    rows = []
    for metric, stats in document["metrics"].items():
        if stats is None:
            rows.append({"metric": metric, "mean": None, "std": None, "min": None, "max": None, "count": 0})
        else:
            rows.append({"metric": metric, **{k: stats.get(k) for k in STAT_HEADERS[1:]}})
    return rows


def _sweep_groups(directory):
    sweep_path = directory / "sweep.csv"
    try:
        frame = pd.read_csv(sweep_path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ReportError(f"unreadable sweep table ({e})", [sweep_path]) from e
    missing = {"axis", "value", "metric", "mean", "std"} - set(frame.columns)
    if missing:
        raise ReportError(f"sweep table lacks columns {sorted(missing)}", [sweep_path])
    groups = []
    for (axis, value), group in frame.groupby(["axis", "value"], sort=False):
        groups.append({
            "axis": axis,
            "value": value,
            "rows": [{"metric": r.metric, "mean": clean_number(float(r.mean)), "std": clean_number(float(r.std))}
                     for r in group.itertuples()],
        })
    return groups


def collect_report(directory):
    """
    Gather the tables of a result directory.

    A directory holding ``sweep.csv`` reports one group per axis value;
    otherwise every ``summary.json`` at its top level or one level below is
    reported as one batch.

    Args:
        directory: Result directory

    Returns:
        dict with "batches" and "sweep" entries

    Raises:
        ReportError: missing directory, nothing to report, or corrupt files
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise ReportError("result directory not found", [directory])
    if (directory / "sweep.csv").exists():
        return {"directory": str(directory), "batches": [], "sweep": _sweep_groups(directory)}
    summaries = sorted(directory.glob("summary.json")) + sorted(directory.glob("*/summary.json"))
    if not summaries:
        raise ReportError("no summary.json or sweep.csv found", [directory / "summary.json", directory / "sweep.csv"])
    batches = []
    for path in summaries:
        document = _read_summary(path)
        batches.append({
            "name": path.parent.name if path.parent != directory else directory.name,
            "run_count": document.get("run_count"),
            "rows": _stat_rows(document),
        })
    return {"directory": str(directory), "batches": batches, "sweep": []}


def render_report(report):
    """Aligned text rendering of collect_report output."""
    batches = [
        {**b, "table": tabulate([[r[h] for h in STAT_HEADERS] for r in b["rows"]], headers=STAT_HEADERS,
                                floatfmt=".6g", missingval="-")}
        for b in report["batches"]
    ]
    groups = [
        {**g, "table": tabulate([[r["metric"], r["mean"], r["std"]] for r in g["rows"]],
                                headers=["metric", "mean", "std"], floatfmt=".6g", missingval="-")}
        for g in report["sweep"]
    ]
    template = template_env.get_template("summary.txt.jinja2")
    return template.render(directory=report["directory"], batches=batches, groups=groups)
