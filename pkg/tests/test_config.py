# tests/test_config.py
import json

import pytest

from spiralloc.config import (
    DEFAULT_CONFIG,
    SEED_ENV_VAR,
    config_to_json,
    load_config_file,
    parse_override,
    resolve_config,
)
from spiralloc.errors import ConfigurationError


def test_defaults_match_reference_parameters():
    config = resolve_config(environ={})
    assert config == DEFAULT_CONFIG
    assert (config.field_width, config.field_height) == (100.0, 100.0)
    assert config.node_count == 100
    assert config.comm_range == 25.0
    assert config.spiral_step == 2.0
    assert config.energy_tx == 50e-9
    assert config.energy_move == 0.8
    assert config.beacon_bits == 256
    assert config.run_count == 30


def test_precedence_env_then_file_then_overrides_then_seed(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps({"seed": 5, "node_count": 50}), encoding="utf-8")

    assert resolve_config(environ={SEED_ENV_VAR: "3"}).seed == 3
    assert resolve_config(path, environ={SEED_ENV_VAR: "3"}).seed == 5
    config = resolve_config(path, ["seed=9", "node_count=60"], environ={SEED_ENV_VAR: "3"})
    assert (config.seed, config.node_count) == (9, 60)
    assert resolve_config(path, ["seed=9"], seed=11, environ={}).seed == 11


def test_unknown_key_in_file_is_rejected(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps({"nodes": 10}), encoding="utf-8")
    with pytest.raises(ConfigurationError, match="nodes"):
        resolve_config(path, environ={})


@pytest.mark.parametrize("item", ["obstacle_density=1.0", "node_count=0", "comm_range=-1", "policy=greedy"])
def test_invalid_values_are_rejected(item):
    with pytest.raises(ConfigurationError):
        resolve_config(overrides=[item], environ={})


def test_parse_override_forms():
    assert parse_override("map_path=builtin:open") == ("map_path", "builtin:open")
    assert parse_override("weights_path=none") == ("weights_path", None)
    with pytest.raises(ConfigurationError):
        parse_override("node_count")
    with pytest.raises(ConfigurationError, match="unknown config key"):
        parse_override("bogus=1")


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigurationError, match="not found"):
        load_config_file(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigurationError, match="not valid JSON"):
        load_config_file(bad)
    array = tmp_path / "array.json"
    array.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigurationError, match="JSON object"):
        load_config_file(array)


def test_with_overrides_validates_and_keeps_original():
    changed = DEFAULT_CONFIG.with_overrides(node_count=300)
    assert changed.node_count == 300
    assert DEFAULT_CONFIG.node_count == 100
    with pytest.raises(ConfigurationError):
        DEFAULT_CONFIG.with_overrides(dynamic_fraction=2.0)


def test_config_json_is_canonical():
    text = config_to_json(DEFAULT_CONFIG)
    assert text.endswith("\n")
    assert list(json.loads(text)) == sorted(json.loads(text))
    assert config_to_json(DEFAULT_CONFIG.with_overrides()) == text
