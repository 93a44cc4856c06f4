# spiralloc/control/fuzzy.py
"""Mamdani fuzzy controller mapping (distance, heading error) to (speed, turn rate)."""
import importlib.resources
import math
from dataclasses import dataclass

import numpy as np
import yaml

from spiralloc.errors import ConfigurationError
from spiralloc.logging_config import get_logger

logger = get_logger("control.fuzzy")

UNIVERSE_SAMPLES = 1001
SENSE_RANGE = 10.0
OMEGA_MAX = math.pi / 2


@dataclass(frozen=True)
class FuzzySet:
    name: str
    points: tuple

    def membership(self, x):
        """Trapezoidal membership (triangles repeat their peak)."""
        if len(self.points) == 3:
            a, b, d = self.points
            c = b
        else:
            a, b, c, d = self.points
        x = np.asarray(x, dtype=float)
        rise = (x - a) / (b - a) if b > a else np.ones_like(x)
        fall = (d - x) / (d - c) if d > c else np.ones_like(x)
        mu = np.clip(np.minimum(rise, fall), 0.0, 1.0)
        return np.where((x < a) | (x > d), 0.0, mu)


@dataclass(frozen=True)
class Rule:
    distance: str
    heading_error: str
    speed: str
    turn_rate: str


@dataclass(frozen=True)
class FuzzyRuleBase:
    distance_sets: tuple
    heading_sets: tuple
    speed_sets: tuple
    turn_sets: tuple
    rules: tuple
    sense_range: float
    v_max: float
    omega_max: float
    speed_universe: np.ndarray
    turn_universe: np.ndarray


def _scaled_sets(section, scale):
    sets = []
    for name, spec in section["sets"].items():
        points = tuple(float(p) * scale for p in spec["points"])
        expected = 3 if spec["shape"] == "triangle" else 4
        if len(points) != expected or list(points) != sorted(points):
            raise ConfigurationError(f"fuzzy set '{name}' has malformed points {spec['points']}")
        sets.append(FuzzySet(name, points))
    return tuple(sets)


def _check_coverage(sets, low, high, label):
    samples = np.linspace(low, high, 2001)
    total = sum(s.membership(samples) for s in sets)
    if np.any(total <= 0):
        raise ConfigurationError(f"fuzzy sets of '{label}' leave part of [{low}, {high}] uncovered")


def build_rule_base(document, sense_range=SENSE_RANGE, v_max=2.0, omega_max=OMEGA_MAX):
    """
    Build a rule base from a parsed YAML document, resolving set scales.

    Args:
        document: Mapping with ``inputs``, ``outputs`` and ``rules``
        sense_range: Distance scale in metres
        v_max: Speed scale in m/s
        omega_max: Turn-rate scale in rad/s

    Returns:
        FuzzyRuleBase

    Raises:
        ConfigurationError: missing sets, uncovered domains or a non-total rule table
    """
    scales = {"sense_range": sense_range, "pi": math.pi, "v_max": v_max, "omega_max": omega_max}
    try:
        inputs, outputs = document["inputs"], document["outputs"]
        distance = _scaled_sets(inputs["distance"], scales[inputs["distance"]["scale"]])
        heading = _scaled_sets(inputs["heading_error"], scales[inputs["heading_error"]["scale"]])
        speed = _scaled_sets(outputs["speed"], scales[outputs["speed"]["scale"]])
        turn = _scaled_sets(outputs["turn_rate"], scales[outputs["turn_rate"]["scale"]])
        speed_range = [u * v_max for u in outputs["speed"]["universe"]]
        turn_range = [u * omega_max for u in outputs["turn_rate"]["universe"]]
        rules = tuple(Rule(**entry) for entry in document["rules"])
    except (KeyError, TypeError) as e:
        raise ConfigurationError(f"malformed fuzzy rule base: {e}") from e

    names = {
        "distance": {s.name for s in distance},
        "heading_error": {s.name for s in heading},
        "speed": {s.name for s in speed},
        "turn_rate": {s.name for s in turn},
    }
    for rule in rules:
        for field_name, known in names.items():
            if getattr(rule, field_name) not in known:
                raise ConfigurationError(f"rule {rule} names unknown {field_name} set")
    pairs = [(r.distance, r.heading_error) for r in rules]
    expected = {(d, h) for d in names["distance"] for h in names["heading_error"]}
    if len(pairs) != len(set(pairs)) or set(pairs) != expected:
        raise ConfigurationError("rule table must hold exactly one rule per (distance, heading_error) pair")

    _check_coverage(distance, 0.0, sense_range, "distance")
    _check_coverage(heading, -math.pi, math.pi, "heading_error")

    return FuzzyRuleBase(
        distance, heading, speed, turn, rules, sense_range, v_max, omega_max,
        np.linspace(*speed_range, UNIVERSE_SAMPLES), np.linspace(*turn_range, UNIVERSE_SAMPLES),
    )


def load_rule_base(name="default", **scales):
    """Load a packaged rule base from ``spiralloc/resources/fuzzy/<name>.yaml``."""
    try:
        text = importlib.resources.read_text("spiralloc.resources.fuzzy", f"{name}.yaml")
    except FileNotFoundError as e:
        raise ConfigurationError(f"unknown fuzzy rule base '{name}'") from e
    logger.debug(f"Loaded fuzzy rule base '{name}'")
    return build_rule_base(yaml.safe_load(text), **scales)


def _centroid(universe, aggregate):
    mass = aggregate.sum()
    if mass <= 0:
        raise ConfigurationError("fuzzy inference produced an empty output set")
    return float((universe * aggregate).sum() / mass)


def flc_infer(rules, distance, heading_error):
    """
    Mamdani inference with min activation, max aggregation and centroid defuzzification.

    Args:
        rules: FuzzyRuleBase
        distance: Obstacle distance in metres (clamped to the sensing range)
        heading_error: Heading minus bearing, radians in (-pi, pi]

    Returns:
        (speed, turn_rate)
    """
    d = min(max(float(distance), 0.0), rules.sense_range)
    dist_mu = {s.name: float(s.membership(d)) for s in rules.distance_sets}
    head_mu = {s.name: float(s.membership(heading_error)) for s in rules.heading_sets}
    speed_sets = {s.name: s for s in rules.speed_sets}
    turn_sets = {s.name: s for s in rules.turn_sets}

    speed_agg = np.zeros_like(rules.speed_universe)
    turn_agg = np.zeros_like(rules.turn_universe)
    for rule in rules.rules:
        strength = min(dist_mu[rule.distance], head_mu[rule.heading_error])
        if strength <= 0:
            continue
        speed_agg = np.maximum(speed_agg, np.minimum(strength, speed_sets[rule.speed].membership(rules.speed_universe)))
        turn_agg = np.maximum(turn_agg, np.minimum(strength, turn_sets[rule.turn_rate].membership(rules.turn_universe)))

    return _centroid(rules.speed_universe, speed_agg), _centroid(rules.turn_universe, turn_agg)
