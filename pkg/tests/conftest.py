# tests/conftest.py
import numpy as np
import pytest

from spiralloc.config import DEFAULT_CONFIG
from spiralloc.world.geometry import Circle, Field, Rectangle
from spiralloc.world.model import Obstacle, SensorNode, WorldModel


def pytest_addoption(parser):
    parser.addoption("--record-baseline", action="store_true", default=False,
                     help="Rewrite tests/baselines/ from the current code instead of asserting against it")


@pytest.fixture
def record_baseline(request):
    return request.config.getoption("--record-baseline")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_config():
    """A quick obstacle-free scenario: 30 x 30 m, 40 nodes, classic DV-Hop."""
    return DEFAULT_CONFIG.with_overrides(
        field_width=30.0,
        field_height=30.0,
        node_count=40,
        comm_range=10.0,
        obstacle_density=0.0,
        run_count=2,
        hop_model="dvhop",
        seed=7,
    )


@pytest.fixture
def obstacle_config(small_config):
    return small_config.with_overrides(field_width=40.0, field_height=40.0, obstacle_density=0.05)


@pytest.fixture
def open_field():
    return Field(50.0, 50.0)


@pytest.fixture
def empty_world(open_field):
    return WorldModel(open_field)


@pytest.fixture
def wall_world(open_field):
    """A disk obstacle and a wall segment, no nodes."""
    obstacles = (
        Obstacle("disk", Circle((30.0, 25.0), 2.0)),
        Obstacle("wall", Rectangle((10.0, 40.0), (40.0, 42.0))),
    )
    return WorldModel(open_field, obstacles)


@pytest.fixture
def make_world():
    def build(field, obstacles=(), node_positions=()):
        nodes = [SensorNode(i, tuple(p), 2.0) for i, p in enumerate(node_positions)]
        return WorldModel(field, tuple(obstacles), tuple(nodes))
    return build


@pytest.fixture
def write_grid(tmp_path):
    """Write a grid map from its body rows; returns the path."""
    def write(rows, cell_size=1.0, name="test.map"):
        path = tmp_path / name
        text = f"{len(rows[0])} {len(rows)} {cell_size}\n" + "\n".join(rows) + "\n"
        path.write_text(text, encoding="utf-8")
        return path
    return write
