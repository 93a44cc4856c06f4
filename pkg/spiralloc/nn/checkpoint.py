# spiralloc/nn/checkpoint.py
"""Versioned JSON tensor dumps: ``{"tensors": {name: {"shape": [...], "values": [...]}}}``."""
import json
from pathlib import Path

import numpy as np

from spiralloc.errors import UsageError
from spiralloc.logging_config import get_logger
from spiralloc.reporting.store import default_serializer

logger = get_logger("nn.checkpoint")

CHECKPOINT_VERSION = 1


def save_checkpoint(path, kind, tensors, metadata=None):
    """
    Write named tensors as a JSON checkpoint.

    Args:
        path: Destination file
        kind: Checkpoint kind, e.g. "td3-policy" or "distance-regressor"
        tensors: Mapping name -> array
        metadata: JSON-compatible mapping stored alongside
    """
    document = {
        "format": kind,
        "version": CHECKPOINT_VERSION,
        "metadata": metadata or {},
        "tensors": {
            name: {"shape": list(np.shape(value)), "values": np.asarray(value, dtype=float).ravel().tolist()}
            for name, value in sorted(tensors.items())
        },
    }
    Path(path).write_text(json.dumps(document, default=default_serializer) + "\n", encoding="utf-8")
    logger.info(f"Checkpoint written to {path} ({len(tensors)} tensors)")


def load_checkpoint(path, kind):
    """
    Read a checkpoint written by save_checkpoint.

    Returns:
        (tensors as arrays, metadata)

    Raises:
        UsageError: missing file, wrong kind or unsupported version
    """
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise UsageError(f"checkpoint not found: {path}") from e
    except json.JSONDecodeError as e:
        raise UsageError(f"checkpoint {path} is not valid JSON: {e}") from e
    if document.get("format") != kind:
        raise UsageError(f"checkpoint {path} holds '{document.get('format')}', expected '{kind}'")
    if document.get("version") != CHECKPOINT_VERSION:
        raise UsageError(f"checkpoint {path} has unsupported version {document.get('version')}")
    tensors = {
        name: np.asarray(entry["values"], dtype=float).reshape(entry["shape"])
        for name, entry in document["tensors"].items()
    }
    return tensors, document.get("metadata", {})
