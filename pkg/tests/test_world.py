# tests/test_world.py
import math

import numpy as np
import pytest

from spiralloc.errors import ConfigurationError, GridParseError, ParameterError
from spiralloc.world.geometry import Circle, Field, Polygon, Rectangle, shapes_overlap, wrap_angle
from spiralloc.world.grid import load_grid_map, read_map_source
from spiralloc.world.model import (
    Obstacle,
    WorldModel,
    build_world,
    deploy_nodes,
    generate_random_obstacles,
    step_dynamic_obstacles,
)


def test_shape_distances():
    circle = Circle((0.0, 0.0), 2.0)
    assert circle.distance((5.0, 0.0)) == pytest.approx((3.0, (2.0, 0.0)))
    assert circle.distance((1.0, 0.0))[0] == 0.0

    rect = Rectangle((0.0, 0.0), (4.0, 2.0))
    distance, closest = rect.distance((7.0, 6.0))
    assert distance == pytest.approx(5.0)
    assert closest == (4.0, 2.0)
    assert rect.distance((1.0, 1.0))[0] == 0.0

    with pytest.raises(ParameterError):
        Circle((0.0, 0.0), 0.0)
    with pytest.raises(ParameterError):
        Rectangle((1.0, 1.0), (1.0, 3.0))


def test_polygon_obstacle_area_and_distance():
    triangle = Polygon(((0.0, 0.0), (4.0, 0.0), (0.0, 3.0)))
    assert triangle.area == pytest.approx(6.0)
    assert triangle.distance((0.0, -2.0))[0] == pytest.approx(2.0)


def test_overlap_ignores_touching_boundaries():
    a = Rectangle((0.0, 0.0), (2.0, 2.0))
    assert not shapes_overlap(a, Rectangle((2.0, 0.0), (4.0, 2.0)))
    assert shapes_overlap(a, Rectangle((1.0, 1.0), (3.0, 3.0)))
    assert shapes_overlap(a, Circle((3.0, 1.0), 1.5))
    assert not shapes_overlap(Circle((0.0, 0.0), 1.0), Circle((2.0, 0.0), 1.0))


@pytest.mark.parametrize("angle, expected", [(0.0, 0.0), (math.pi, math.pi), (-math.pi, math.pi),
                                             (3 * math.pi / 2, -math.pi / 2), (5 * math.pi, math.pi)])
def test_wrap_angle(angle, expected):
    assert wrap_angle(angle) == pytest.approx(expected)


def test_grid_parsing_merges_cells(write_grid):
    grid = load_grid_map(read_map_source(str(write_grid(["##..", "##..", "...#"], cell_size=2.0))))
    assert (grid.cols, grid.rows, grid.cell_size) == (4, 3, 2.0)
    assert (grid.field.width, grid.field.height) == (8.0, 6.0)
    assert grid.occupied_rectangles() == [(0, 0, 1, 1), (2, 3, 2, 3)]
    rects = grid.to_rectangles()
    assert rects[0].bounds == (0.0, 0.0, 4.0, 4.0)
    assert sum(r.area for r in rects) == pytest.approx(5 * 4.0)


@pytest.mark.parametrize("text, line", [
    ("", 1),
    ("3 2\n...\n...\n", 1),
    ("3 2 1.0\n...\n..\n", 3),
    ("3 2 1.0\n...\n.x.\n", 3),
    ("3 2 1.0\n...\n", 3),
    ("3 1 1.0\n...\n...\n", 3),
])
def test_grid_errors_name_the_line(text, line):
    with pytest.raises(GridParseError) as excinfo:
        load_grid_map(text)
    assert excinfo.value.line == line


@pytest.mark.parametrize("name", ["open", "blocks", "corridors"])
def test_builtin_maps_load(name):
    grid = load_grid_map(read_map_source(f"builtin:{name}"))
    assert (grid.field.width, grid.field.height) == (100.0, 100.0)
    assert grid.to_rectangles()
    assert not grid.is_occupied(20, 20)


def test_unknown_builtin_map():
    with pytest.raises(ConfigurationError):
        read_map_source("builtin:nowhere")


def test_random_obstacles_reach_density_without_overlap(open_field, rng):
    obstacles = generate_random_obstacles(open_field, 0.2, rng, keep_out=(open_field.center, 3.0))
    area = sum(o.shape.area for o in obstacles)
    assert area / open_field.area == pytest.approx(0.2, abs=1e-5)
    for i, a in enumerate(obstacles):
        assert a.shape.distance(open_field.center)[0] >= 3.0
        for b in obstacles[i + 1:]:
            assert not shapes_overlap(a.shape, b.shape)


def test_zero_density_gives_no_obstacles(open_field, rng):
    assert generate_random_obstacles(open_field, 0.0, rng) == []
    with pytest.raises(ConfigurationError):
        generate_random_obstacles(open_field, 1.0, rng)


def test_nodes_avoid_obstacles(open_field, rng):
    obstacles = generate_random_obstacles(open_field, 0.3, rng)
    nodes = deploy_nodes(open_field, obstacles, 200, rng, 2.0)
    world = WorldModel(open_field, tuple(obstacles), tuple(nodes))
    assert [n.id for n in nodes] == list(range(200))
    assert not any(world.in_obstacle(n.true_position) for n in nodes)
    assert all(open_field.contains(n.true_position) for n in nodes)


def test_dynamic_obstacles_reflect_at_boundary():
    field = Field(10.0, 10.0)
    mover = Obstacle("m", Circle((9.0, 5.0), 0.5), "dynamic", (1.0, 0.0))
    still = Obstacle("s", Rectangle((1.0, 1.0), (2.0, 2.0)))
    stepped = step_dynamic_obstacles([mover, still], 1.0, field)
    assert stepped[1] is still
    assert stepped[0].velocity == (-1.0, 0.0)
    assert stepped[0].shape.bounds[2] <= 10.0
    assert stepped[0].shape.center == pytest.approx((9.0, 5.0))


def test_nearest_obstacle_and_clearance(wall_world):
    nearest = wall_world.nearest_obstacle((30.0, 20.0))
    assert nearest.obstacle_id == "disk"
    assert nearest.distance == pytest.approx(3.0)
    assert wall_world.clearance((20.0, 25.0), 0.0, 20.0) == pytest.approx(8.0)
    assert wall_world.clearance((20.0, 25.0), math.pi, 5.0) == pytest.approx(5.0)
    assert wall_world.nearest_obstacle((0.0, 0.0)) is not None
    assert WorldModel(Field(5.0, 5.0)).nearest_obstacle((1.0, 1.0)) is None


def test_build_world_is_seeded(small_config):
    config = small_config.with_overrides(obstacle_density=0.1)
    a, b = build_world(config), build_world(config)
    assert a.obstacles == b.obstacles
    np.testing.assert_array_equal(a.node_positions, b.node_positions)
    c = build_world(config.with_overrides(seed=config.seed + 1))
    assert not np.array_equal(a.node_positions, c.node_positions)


def test_build_world_from_map_takes_grid_extent(small_config, write_grid):
    path = write_grid(["....", ".#..", "....", "...."], cell_size=5.0)
    world = build_world(small_config.with_overrides(map_path=str(path)))
    assert (world.field.width, world.field.height) == (20.0, 20.0)
    assert len(world.obstacles) == 1
    assert world.obstacles[0].shape.bounds == (5.0, 5.0, 10.0, 10.0)
