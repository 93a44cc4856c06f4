# tests/test_locnet.py
import math

import numpy as np
import pytest
from scipy.sparse import csgraph
from scipy.spatial.distance import cdist

from spiralloc.errors import DegenerateInputError, TrainingDivergedError, UsageError
from spiralloc.locnet.graph import (
    UNREACHABLE,
    anchor_context,
    anchor_pair_hops,
    build_graph,
    flood_hops,
    hop_size,
)
from spiralloc.locnet.multilateration import anchor_selection, check_non_collinear, estimate_position
from spiralloc.locnet.pipeline import BeaconLog, localize_network
from spiralloc.locnet.regressor import (
    DistanceRegressor,
    RegressorSettings,
    pair_features,
    predict_distance,
    train_regressor,
)


def bfs_oracle(positions, comm_range, beacon):
    """Hop counts via scipy shortest paths from a phantom vertex linked to the seeded nodes."""
    n = len(positions)
    adjacency = (cdist(positions, positions) <= comm_range).astype(float)
    np.fill_diagonal(adjacency, 0.0)
    seeds = np.linalg.norm(positions - beacon, axis=1) <= comm_range
    full = np.zeros((n + 1, n + 1))
    full[:n, :n] = adjacency
    full[n, :n] = full[:n, n] = seeds
    distances = csgraph.shortest_path(full, unweighted=True, indices=n)[:n]
    return np.where(np.isfinite(distances), distances, UNREACHABLE).astype(int)


def uniform_pair_data(rng, count=600):
    """Synthetic pairs on a uniform-density field where distance tracks hops x hop size."""
    hops = rng.integers(1, 8, size=count).astype(float)
    sizes = rng.uniform(14.0, 18.0, size=count)
    contexts = np.column_stack([rng.uniform(8, 12, size=count), np.full(count, 10.0), np.zeros(count)])
    truth = hops * sizes * rng.uniform(0.85, 0.95, size=count)
    return pair_features(hops, sizes, contexts), truth


# Graph and flooding

def test_chain_flood():
    graph = build_graph([(0.0, 0.0), (20.0, 0.0), (40.0, 0.0), (200.0, 0.0)], 25.0)
    result = flood_hops(graph, (-10.0, 0.0))
    np.testing.assert_array_equal(result.hops, [1, 2, 3, UNREACHABLE])
    assert result.forwarders == (0, 1, 2)


def test_adjacency_is_symmetric(rng):
    graph = build_graph(rng.uniform(0, 100, size=(80, 2)), 20.0)
    assert (graph.adjacency != graph.adjacency.T).nnz == 0
    assert graph.adjacency.diagonal().sum() == 0


def test_flood_matches_bfs_on_random_graphs():
    rng = np.random.default_rng(99)
    for _ in range(100):
        n = int(rng.integers(5, 501))
        positions = rng.uniform(0, 100, size=(n, 2))
        comm_range = float(rng.uniform(5, 30))
        beacon = rng.uniform(0, 100, size=2)
        graph = build_graph(positions, comm_range)
        np.testing.assert_array_equal(flood_hops(graph, beacon).hops, bfs_oracle(positions, comm_range, beacon))


def test_depleted_nodes_hear_but_do_not_relay():
    graph = build_graph([(0.0, 0.0), (20.0, 0.0), (40.0, 0.0)], 25.0)
    result = flood_hops(graph, (-10.0, 0.0), relay=lambda n: n != 1)
    np.testing.assert_array_equal(result.hops, [1, 2, UNREACHABLE])


def test_pair_hops_and_hop_size():
    positions = np.array([(10.0, 0.0), (30.0, 0.0), (50.0, 0.0)])
    graph = build_graph(positions, 25.0)
    beacons = [(-10.0, 0.0), (70.0, 0.0)]
    table = np.vstack([flood_hops(graph, b).hops for b in beacons])
    seeds = [graph.within_range(b) for b in beacons]
    pair = anchor_pair_hops(table, seeds)
    assert pair[0, 1] == pair[1, 0] == 4
    assert pair[0, 0] == UNREACHABLE
    np.testing.assert_allclose(hop_size(np.array(beacons), pair), [20.0, 20.0])


def test_hop_size_reference_values():
    anchors = np.array([(0.0, 0.0), (30.0, 0.0), (0.0, 40.0)])
    pair = np.array([[UNREACHABLE, 2, 2], [2, UNREACHABLE, 3], [2, 3, UNREACHABLE]])
    assert hop_size(anchors, pair)[0] == pytest.approx(17.5)
    two = hop_size(np.array([(0.0, 0.0), (30.0, 0.0)]), np.array([[UNREACHABLE, 2], [2, UNREACHABLE]]))
    np.testing.assert_allclose(two, [15.0, 15.0])
    np.testing.assert_allclose(hop_size(anchors * 3.0, pair), 3.0 * hop_size(anchors, pair))


def test_undefined_pairs_give_undefined_hop_size():
    anchors = np.array([(0.0, 0.0), (500.0, 0.0)])
    pair = np.full((2, 2), UNREACHABLE)
    assert np.all(np.isnan(hop_size(anchors, pair)))


def test_anchor_context_shape(rng):
    graph = build_graph(rng.uniform(0, 50, size=(30, 2)), 15.0)
    seeds = [graph.within_range((10.0, 10.0)), graph.within_range((40.0, 40.0))]
    context = anchor_context(graph, seeds, np.array([[UNREACHABLE, 2], [2, UNREACHABLE]]))
    assert context.shape == (2, 3)
    assert context[0, 1] == pytest.approx(graph.degrees().mean())
    assert context[0, 2] == 0.0


# Multilateration

@pytest.mark.parametrize("points, expected", [
    ([(0, 0), (1, 1), (2, 2)], False),
    ([(0, 0), (10, 0), (0, 10)], True),
    ([(0, 0), (10, 0), (20, 1e-9)], False),
    ([(0, 0), (1, 0)], False),
])
def test_non_collinearity(points, expected):
    assert check_non_collinear(points) is expected


def test_exact_distances_recover_the_point():
    estimate = estimate_position([(0, 0), (10, 0), (0, 10)], [5.0, math.sqrt(65), math.sqrt(45)])
    assert estimate.position == pytest.approx((3.0, 4.0), abs=1e-6)
    at_anchor = estimate_position([(0, 0), (10, 0), (0, 10)], [0.0, 10.0, 10.0])
    assert at_anchor.position == pytest.approx((0.0, 0.0), abs=1e-6)


def test_exactness_over_random_anchor_sets():
    rng = np.random.default_rng(13)
    for _ in range(1000):
        count = int(rng.integers(3, 5))
        anchors = rng.uniform(0, 100, size=(count, 2))
        if not check_non_collinear(anchors, 1e-3):
            continue
        truth = rng.uniform(0, 100, size=2)
        estimate = estimate_position(anchors, np.linalg.norm(anchors - truth, axis=1))
        assert np.linalg.norm(np.array(estimate.position) - truth) < 1e-6


def test_perturbed_estimate_beats_random_probes(rng):
    anchors = np.array([(0.0, 0.0), (40.0, 5.0), (10.0, 35.0), (45.0, 40.0)])
    truth = np.array([20.0, 18.0])
    distances = np.linalg.norm(anchors - truth, axis=1) * 1.01
    estimate = np.array(estimate_position(anchors, distances).position)

    def objective(p):
        return np.mean((np.linalg.norm(anchors - p, axis=1) - distances) ** 2)

    radius = 5.0 * np.sqrt(rng.uniform(size=1000))
    angle = rng.uniform(0, 2 * np.pi, size=1000)
    probes = estimate + np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
    assert all(objective(estimate) < objective(p) for p in probes)


def test_refuses_degenerate_anchor_sets():
    with pytest.raises(DegenerateInputError):
        estimate_position([(0, 0), (10, 0)], [1.0, 1.0])
    with pytest.raises(DegenerateInputError):
        estimate_position([(0, 0), (5, 5), (10, 10)], [1.0, 1.0, 1.0])


def test_anchor_selection_caps_and_breaks_ties():
    positions = np.array([(x * 20.0, y * 20.0) for x in range(5) for y in range(4)])
    chosen = anchor_selection(list(range(20)), [1] * 20, positions, 25.0)
    assert chosen.status == "ok" and len(chosen.anchors) == 10
    tie = anchor_selection([5, 3, 4], [2, 2, 2], np.array([(0, 0)] * 3 + [(0, 0), (30, 0), (0, 30)]), 25.0)
    assert tie.anchors == (3, 4, 5)


def test_anchor_selection_reports_failures():
    positions = np.array([(0.0, 0.0), (10.0, 10.0), (20.0, 20.0)])
    assert anchor_selection([0, 1, 2], [1, 1, 1], positions, 25.0).status == "collinear"
    assert anchor_selection([0, 1], [1, 1], positions, 25.0).status == "too_few_anchors"


def test_collinear_choice_is_repaired():
    positions = np.array([(0.0, 0.0), (30.0, 0.0), (60.0, 0.0), (30.0, 30.0)])
    selection = anchor_selection([0, 1, 2, 3], [1, 1, 1, 2], positions, 25.0, max_anchors=3)
    assert selection.status == "ok"
    assert 3 in selection.anchors
    assert check_non_collinear(positions[list(selection.anchors)])


# Regressor

def test_fallback_is_the_classic_product():
    assert predict_distance(None, [3], [15.0], np.zeros((1, 3)))[0] == pytest.approx(45.0)


def test_untrained_regressor_needs_the_fallback_flag(rng):
    regressor = DistanceRegressor(rng, 100.0)
    np.testing.assert_allclose(predict_distance(regressor, [2], [10.0], np.zeros((1, 3))), [20.0])
    with pytest.raises(UsageError):
        predict_distance(regressor, [2], [10.0], np.zeros((1, 3)), allow_fallback=False)
    with pytest.raises(UsageError):
        regressor.predict(pair_features([2], [10.0], np.zeros((1, 3))))


def test_training_keeps_the_better_of_regressor_and_product(rng):
    features, truth = uniform_pair_data(rng)
    fit = train_regressor(features, truth, np.random.default_rng(4), 150.0, RegressorSettings(epochs=60))
    assert fit.validation_rmse <= fit.initial_validation_rmse
    if fit.retained:
        assert fit.validation_rmse <= fit.fallback_rmse
        held_features, held_truth = uniform_pair_data(np.random.default_rng(8), 200)
        learned = np.sqrt(np.mean((fit.regressor.predict(held_features) - held_truth) ** 2))
        assert learned < fit.fallback_rmse * 1.5
    else:
        assert fit.validation_rmse > fit.fallback_rmse


def test_predictions_are_clamped_to_the_field(rng):
    regressor = DistanceRegressor(rng, 150.0)
    regressor.network.layers["head"].params["W"] *= 50.0
    regressor.trained = True
    outputs = regressor.predict(rng.uniform(-50, 50, size=(10_000, 2, 3)))
    assert outputs.min() >= 0.0 and outputs.max() <= 150.0
    assert outputs.max() == 150.0 or outputs.min() == 0.0


def test_regressor_training_is_deterministic(rng):
    features, truth = uniform_pair_data(rng, 200)
    settings = RegressorSettings(epochs=5)
    a = train_regressor(features, truth, np.random.default_rng(4), 150.0, settings)
    b = train_regressor(features, truth, np.random.default_rng(4), 150.0, settings)
    assert a.as_dict() == b.as_dict()


def test_regressor_divergence_is_reported(rng):
    features, truth = uniform_pair_data(rng, 50)
    truth[:] = np.nan
    with pytest.raises(TrainingDivergedError):
        train_regressor(features, truth, np.random.default_rng(4), 150.0, RegressorSettings(epochs=2))
    with pytest.raises(UsageError):
        train_regressor(features[:1], truth[:1], rng, 150.0)


def test_regressor_checkpoint(tmp_path, rng):
    features, truth = uniform_pair_data(rng, 200)
    regressor = DistanceRegressor(rng, 150.0)
    regressor.trained = True
    path = tmp_path / "regressor.ckpt"
    regressor.save(path, {"note": 1})
    np.testing.assert_allclose(DistanceRegressor.load(path).predict(features), regressor.predict(features))


# Pipeline

def _ring_beacons(graph, centre, radius, count):
    log = BeaconLog.empty()
    for k in range(count):
        angle = 2 * np.pi * k / count
        position = (centre[0] + radius * np.cos(angle), centre[1] + radius * np.sin(angle))
        log.append(position, float(k), flood_hops(graph, position).hops, graph.within_range(position))
    return log


def test_localize_network_with_classic_dvhop(rng):
    positions = rng.uniform(0, 60, size=(120, 2))
    graph = build_graph(positions, 15.0)
    beacons = _ring_beacons(graph, (30.0, 30.0), 20.0, 12)
    outcome = localize_network(beacons, graph, positions, 60 * math.sqrt(2), hop_model="dvhop")
    assert not outcome.used_regressor
    estimates = outcome.estimates()
    assert len(estimates) > 100
    errors = [math.dist(estimates[n], positions[n]) for n in estimates]
    assert np.sqrt(np.mean(np.square(errors))) < 25.0
    for row in outcome.rows:
        if row.status == "localized":
            assert row.anchors_used >= 3


def test_localize_network_marks_unreachable_nodes():
    positions = np.array([(0.0, 0.0), (10.0, 0.0), (90.0, 90.0)])
    graph = build_graph(positions, 15.0)
    beacons = _ring_beacons(graph, (5.0, 0.0), 3.0, 4)
    outcome = localize_network(beacons, graph, positions, 150.0, hop_model="dvhop")
    assert outcome.rows[2].status == "unreachable"
    assert outcome.rows[2].estimate is None


def test_learned_hop_model_keeps_samples(rng):
    positions = rng.uniform(0, 60, size=(120, 2))
    graph = build_graph(positions, 15.0)
    beacons = _ring_beacons(graph, (30.0, 30.0), 20.0, 12)
    outcome = localize_network(beacons, graph, positions, 60 * math.sqrt(2), hop_model="learned",
                               rng=np.random.default_rng(0), settings=RegressorSettings(epochs=5),
                               keep_samples=True)
    features, targets = outcome.pair_samples
    assert features.shape == (len(targets), 2, 3)
    assert outcome.used_regressor == (outcome.regressor_fit is not None and outcome.regressor_fit.retained)
