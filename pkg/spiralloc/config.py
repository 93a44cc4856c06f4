# spiralloc/config.py
import json
import os
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from spiralloc.errors import ConfigurationError
from spiralloc.logging_config import get_logger

logger = get_logger("config")

SEED_ENV_VAR = "AOASS_SEED"


class ScenarioConfig(BaseModel):
    """Flat scenario description; every key maps 1:1 to the scenario JSON file."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    field_width: float = 100.0
    field_height: float = 100.0
    node_count: int = 100
    comm_range: float = 25.0
    spiral_step: float = 2.0
    obstacle_density: float = 0.1
    dynamic_fraction: float = 0.0
    energy_initial: float = 2.0
    energy_tx: float = 50e-9
    energy_move: float = 0.8
    beacon_bits: int = 256
    seed: int = 42
    policy: Literal["heuristic", "td3"] = "heuristic"
    run_count: int = 30
    anchor_speed: float = 2.0
    dt: float = 0.1
    time_cap_factor: float = 10.0
    hop_model: Literal["dvhop", "learned"] = "learned"
    map_path: Optional[str] = None
    weights_path: Optional[str] = None

    @field_validator("field_width", "field_height", "comm_range", "spiral_step",
                     "anchor_speed", "dt", "time_cap_factor")
    @classmethod
    def _positive(cls, value, info):
        if value <= 0:
            raise ValueError(f"{info.field_name} must be > 0")
        return value

    @field_validator("energy_initial", "energy_tx", "energy_move")
    @classmethod
    def _non_negative(cls, value, info):
        if value < 0:
            raise ValueError(f"{info.field_name} must be >= 0")
        return value

    @field_validator("obstacle_density")
    @classmethod
    def _density(cls, value):
        if not 0 <= value < 1:
            raise ValueError("obstacle_density must be in [0, 1)")
        return value

    @field_validator("dynamic_fraction")
    @classmethod
    def _fraction(cls, value):
        if not 0 <= value <= 1:
            raise ValueError("dynamic_fraction must be in [0, 1]")
        return value

    @field_validator("node_count", "run_count", "beacon_bits")
    @classmethod
    def _at_least_one(cls, value, info):
        if value < 1:
            raise ValueError(f"{info.field_name} must be >= 1")
        return value

    @field_validator("seed")
    @classmethod
    def _seed_range(cls, value):
        if not 0 <= value < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        return value

    def with_overrides(self, **changes):
        """Return a validated copy with the given keys replaced."""
        return build_config({**self.model_dump(), **changes})


DEFAULT_CONFIG = ScenarioConfig()


def build_config(data):
    """
    Validate a mapping into a ScenarioConfig.

    Args:
        data: Mapping of scenario keys to values (strings are coerced)

    Returns:
        ScenarioConfig

    Raises:
        ConfigurationError: unknown keys or invalid values
    """
    try:
        return ScenarioConfig.model_validate(dict(data))
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigurationError(f"invalid scenario config: {problems}") from e


def parse_override(item):
    """Split a ``key=value`` override into its parts."""
    if "=" not in item:
        raise ConfigurationError(f"override '{item}' is not of the form key=value")
    key, value = item.split("=", 1)
    key = key.strip()
    if key not in ScenarioConfig.model_fields:
        raise ConfigurationError(f"unknown config key '{key}'")
    value = value.strip()
    if value.lower() in {"none", "null"}:
        return key, None
    return key, value


def load_config_file(path):
    """Read a flat scenario JSON object from disk."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigurationError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"config file {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"config file {path} must hold a JSON object")
    return data


def resolve_config(config_path=None, overrides=(), seed=None, environ=None):
    """
    Resolve the effective scenario configuration.

    Precedence, lowest first: built-in defaults, the seed environment variable,
    the config file, ``key=value`` overrides, the explicit seed.

    Args:
        config_path: Optional path to a scenario JSON file
        overrides: Iterable of ``key=value`` strings
        seed: Optional explicit seed
        environ: Environment mapping (defaults to ``os.environ``)

    Returns:
        ScenarioConfig
    """
    environ = os.environ if environ is None else environ
    data = DEFAULT_CONFIG.model_dump()

    env_seed = environ.get(SEED_ENV_VAR)
    if env_seed:
        data["seed"] = env_seed
    if config_path is not None:
        data.update(load_config_file(config_path))
    for item in overrides:
        key, value = parse_override(item)
        data[key] = value
    if seed is not None:
        data["seed"] = seed

    config = build_config(data)
    logger.debug(f"Resolved config with seed {config.seed}")
    return config


def config_to_json(config):
    """Canonical JSON text of a config (sorted keys, trailing newline)."""
    return json.dumps(config.model_dump(), indent=2, sort_keys=True) + "\n"
