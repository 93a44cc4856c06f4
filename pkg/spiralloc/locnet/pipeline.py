# spiralloc/locnet/pipeline.py
"""End-of-run range-free localization over all virtual anchors."""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from spiralloc.errors import DegenerateInputError, TrainingDivergedError
from spiralloc.locnet.graph import UNREACHABLE, anchor_context, anchor_pair_hops, hop_size
from spiralloc.locnet.multilateration import LocalizationRow, anchor_selection, estimate_position
from spiralloc.locnet.regressor import RegressorSettings, pair_features, predict_distance, train_regressor
from spiralloc.logging_config import get_logger

logger = get_logger("locnet.pipeline")

LOCALIZATION_COLUMNS = ["node_id", "true_x", "true_y", "est_x", "est_y", "anchors_used", "residual_rms", "status"]


@dataclass
class BeaconLog:
    """Virtual anchors broadcast during a run, with their flood results."""

    positions: list
    times: list
    hop_rows: list
    seed_sets: list

    @classmethod
    def empty(cls):
        return cls([], [], [], [])

    def append(self, position, time, hops, seeds):
        self.positions.append(tuple(position))
        self.times.append(time)
        self.hop_rows.append(np.asarray(hops))
        self.seed_sets.append(np.asarray(seeds, dtype=int))

    def __len__(self):
        return len(self.positions)

    def hop_table(self, node_count):
        if not self.hop_rows:
            return np.full((0, node_count), UNREACHABLE, dtype=int)
        return np.vstack(self.hop_rows)


@dataclass(frozen=True)
class LocalizationOutcome:
    rows: tuple
    hop_sizes: np.ndarray
    regressor_fit: Optional[object]
    used_regressor: bool
    pair_samples: Optional[tuple] = None

    def estimates(self):
        return {r.node_id: r.estimate for r in self.rows if r.status == "localized"}


def pair_training_samples(positions, pair_hops, hop_sizes, contexts):
    """Self-supervised samples from anchor pairs whose both endpoints are known."""
    i_idx, j_idx = np.nonzero((pair_hops > 0) & np.isfinite(hop_sizes)[:, None])
    features = pair_features(pair_hops[i_idx, j_idx], hop_sizes[i_idx], contexts[i_idx])
    targets = np.linalg.norm(positions[i_idx] - positions[j_idx], axis=1)
    return features, targets


def localize_network(beacons, graph, node_positions, field_diagonal, hop_model="learned",
                     regressor=None, rng=None, settings=RegressorSettings(), keep_samples=False):
    """
    Localize every node from the run's virtual anchors.

    Args:
        beacons: BeaconLog
        graph: ConnectivityGraph of the nodes
        node_positions: True node positions (reported alongside estimates)
        field_diagonal: Clamp for predicted distances
        hop_model: "dvhop" for the classic product, "learned" for a per-run regressor
        regressor: Pre-trained DistanceRegressor overriding per-run training
        rng: Generator used by per-run training
        settings: RegressorSettings
        keep_samples: Also return up to settings.max_samples anchor-pair training samples

    Returns:
        LocalizationOutcome
    """
    node_count = graph.node_count
    hop_table = beacons.hop_table(node_count)
    anchor_positions = np.asarray(beacons.positions, dtype=float).reshape(-1, 2)

    pair_hops = anchor_pair_hops(hop_table, beacons.seed_sets)
    sizes = hop_size(anchor_positions, pair_hops) if len(anchor_positions) else np.zeros(0)
    contexts = anchor_context(graph, beacons.seed_sets, pair_hops)

    fit = None
    model = regressor
    samples = None
    if len(anchor_positions) > 1 and (keep_samples or (model is None and hop_model == "learned")):
        features, targets = pair_training_samples(anchor_positions, pair_hops, sizes, contexts)
        if keep_samples:
            keep = np.arange(len(targets))
            if len(keep) > settings.max_samples:
                keep = np.sort(rng.choice(len(keep), size=settings.max_samples, replace=False))
            samples = (features[keep], targets[keep])
        if model is None and hop_model == "learned" and len(targets) >= 2:
            try:
                fit = train_regressor(features, targets, rng, field_diagonal, settings)
                model = fit.regressor
            except TrainingDivergedError as e:
                logger.warning(f"Per-run regressor training failed, using hop-size fallback: {e}")

    rows = []
    for node in range(node_count):
        truth = tuple(float(v) for v in node_positions[node])
        hops = hop_table[:, node] if len(hop_table) else np.zeros(0, dtype=int)
        reachable = np.nonzero(hops >= 1)[0]
        if reachable.size == 0:
            rows.append(LocalizationRow(node, truth, None, 0, None, "unreachable"))
            continue
        usable = reachable[np.isfinite(sizes[reachable])]
        selection = anchor_selection(usable, hops[usable], anchor_positions, graph.comm_range)
        if selection.status != "ok":
            rows.append(LocalizationRow(node, truth, None, len(selection.anchors), None, selection.status))
            continue
        chosen = np.array(selection.anchors, dtype=int)
        distances = predict_distance(model, hops[chosen], sizes[chosen], contexts[chosen])
        try:
            estimate = estimate_position(anchor_positions[chosen], distances, node)
        except DegenerateInputError as e:
            logger.debug(f"Localization refused: {e}")
            rows.append(LocalizationRow(node, truth, None, len(chosen), None, "collinear"))
            continue
        rows.append(LocalizationRow(node, truth, estimate.position, estimate.anchors_used,
                                    estimate.residual_rms, "localized"))

    localized = sum(r.status == "localized" for r in rows)
    logger.debug(f"Localized {localized}/{node_count} nodes from {len(anchor_positions)} virtual anchors")
    return LocalizationOutcome(tuple(rows), sizes, fit, model is not None, samples)
