# spiralloc/reporting/store.py
import json
import math
import uuid
from pathlib import Path

import numpy as np

from spiralloc.logging_config import get_logger

logger = get_logger("reporting.store")

RUN_NAMESPACE = uuid.NAMESPACE_URL


def default_serializer(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    return str(obj)


def clean_number(value):
    """Map NaN and infinities to None so JSON never carries them."""
    if value is None:
        return None
    if isinstance(value, (float, np.floating)) and not math.isfinite(value):
        return None
    return value


def dumps(data):
    return json.dumps(data, indent=2, sort_keys=True, default=default_serializer) + "\n"


class ResultStore:
    """One output directory of results, identified by a deterministic run id."""

    def __init__(self, directory, config_json=None):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.run_id = config_to_run_id(config_json) if config_json is not None else None

    def path(self, name):
        return self.directory / name

    def write_text(self, name, text):
        path = self.path(name)
        path.write_text(text, encoding="utf-8")
        logger.debug(f"Wrote {path}")
        return path

    def write_json(self, name, data):
        return self.write_text(name, dumps(data))

    def write_frame(self, name, frame):
        path = self.path(name)
        frame.to_csv(path, index=False, lineterminator="\n")
        logger.debug(f"Wrote {path} ({len(frame)} rows)")
        return path


def config_to_run_id(config_json):
    """
    Deterministic Version 5 UUID of a resolved configuration.

    Args:
        config_json: Canonical config JSON text

    Returns:
        str: UUID identifying the configuration
    """
    return str(uuid.uuid5(RUN_NAMESPACE, f"spiralloc:{config_json}"))
