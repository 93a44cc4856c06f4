# spiralloc/locnet/multilateration.py
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from spiralloc.errors import DegenerateInputError
from spiralloc.logging_config import get_logger

logger = get_logger("locnet.multilateration")

COLLINEARITY_EPS = 1e-6
MAX_ANCHORS = 10
MAX_ITERATIONS = 100
STEP_TOLERANCE = 1e-9
MAX_HALVINGS = 40


@dataclass(frozen=True)
class PositionEstimate:
    node_id: int
    position: tuple
    residual_rms: float
    anchors_used: int
    linearized_fallback: bool = False


@dataclass(frozen=True)
class AnchorSelection:
    anchors: tuple
    status: str


def check_non_collinear(positions, eps=COLLINEARITY_EPS):
    """
    True iff some triple spans a triangle whose doubled area exceeds eps times
    the squared largest pairwise distance.
    """
    points = np.asarray(positions, dtype=float).reshape(-1, 2)
    if len(points) < 3:
        return False
    diffs = points[:, None, :] - points[None, :, :]
    scale = float((diffs ** 2).sum(axis=2).max())
    if scale <= 0.0:
        return False
    triples = np.array(list(combinations(range(len(points)), 3)))
    a, b, c = points[triples[:, 0]], points[triples[:, 1]], points[triples[:, 2]]
    doubled_area = np.abs((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
    return bool(np.any(doubled_area > eps * scale))


def linearized_solution(anchors, distances):
    """Least-squares position from differences of squared range equations against the last anchor."""
    ref, d_ref = anchors[-1], distances[-1]
    A = 2.0 * (anchors[:-1] - ref)
    b = (d_ref ** 2 - distances[:-1] ** 2
         + (anchors[:-1] ** 2).sum(axis=1) - (ref ** 2).sum())
    solution, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
    return solution, rank


def _residuals(point, anchors, distances):
    return np.linalg.norm(anchors - point, axis=1) - distances


def _objective(point, anchors, distances):
    r = _residuals(point, anchors, distances)
    return float(np.mean(r ** 2))


def estimate_position(anchors, distances, node_id=-1):
    """
    Multilaterate a node from anchor positions and estimated distances.

    Starts from the linearized least-squares solution and refines with
    Gauss-Newton on the range residuals, halving any step that increases the
    mean squared residual.

    Args:
        anchors: Array (M, 2), M >= 3, non-collinear
        distances: Array (M,)
        node_id: Id recorded in the estimate

    Returns:
        PositionEstimate

    Raises:
        DegenerateInputError: fewer than 3 anchors or a collinear set
    """
    anchors = np.asarray(anchors, dtype=float).reshape(-1, 2)
    distances = np.asarray(distances, dtype=float)
    if len(anchors) < 3:
        raise DegenerateInputError(f"node {node_id}: {len(anchors)} anchors, need at least 3")
    if not check_non_collinear(anchors):
        raise DegenerateInputError(f"node {node_id}: anchors are collinear")

    point, rank = linearized_solution(anchors, distances)
    if rank < 2:
        raise DegenerateInputError(f"node {node_id}: linear system is rank deficient")
    objective = _objective(point, anchors, distances)
    fallback = False

    for _ in range(MAX_ITERATIONS):
        offsets = point - anchors
        norms = np.linalg.norm(offsets, axis=1)
        safe = norms > 1e-12
        J = np.zeros_like(offsets)
        J[safe] = offsets[safe] / norms[safe, None]
        r = norms - distances
        step, _, j_rank, _ = np.linalg.lstsq(J, -r, rcond=None)
        if j_rank < 2:
            fallback = True
            point, _ = linearized_solution(anchors, distances)
            objective = _objective(point, anchors, distances)
            break
        for _ in range(MAX_HALVINGS):
            candidate = point + step
            candidate_objective = _objective(candidate, anchors, distances)
            if candidate_objective <= objective:
                break
            step = step / 2.0
        else:
            break
        point, objective = candidate, candidate_objective
        if np.linalg.norm(step) < STEP_TOLERANCE:
            break

    return PositionEstimate(node_id, (float(point[0]), float(point[1])), float(np.sqrt(objective)),
                            len(anchors), fallback)


def anchor_selection(candidates, hops, positions, comm_range, max_anchors=MAX_ANCHORS):
    """
    Choose the anchors a node multilaterates from.

    Candidates are ordered by (hop count, id). A first pass keeps anchors at
    least R/2 apart from those already chosen, a second pass fills the
    remaining slots in order. A collinear choice gets its last slot swapped
    for the first remaining candidate that breaks the collinearity.

    Args:
        candidates: Ids of reachable anchors with a defined hop size
        hops: Hop count per candidate (same order)
        positions: Array (B, 2) of all anchor positions
        comm_range: R in metres
        max_anchors: Cap M_max

    Returns:
        AnchorSelection with status "ok", "too_few_anchors" or "collinear"
    """
    order = sorted(zip(hops, candidates))
    ranked = [int(anchor) for _, anchor in order]
    if len(ranked) < 3:
        return AnchorSelection(tuple(ranked), "too_few_anchors")

    spacing = comm_range / 2.0
    chosen = []
    for anchor in ranked:
        if len(chosen) == max_anchors:
            break
        if all(np.linalg.norm(positions[anchor] - positions[other]) >= spacing for other in chosen):
            chosen.append(anchor)
    for anchor in ranked:
        if len(chosen) == max_anchors:
            break
        if anchor not in chosen:
            chosen.append(anchor)
    chosen.sort(key=lambda a: ranked.index(a))

    if check_non_collinear(positions[chosen]):
        return AnchorSelection(tuple(chosen), "ok")
    head = chosen[:-1] if len(chosen) == max_anchors else chosen
    for anchor in ranked:
        if anchor in chosen:
            continue
        trial = head + [anchor]
        if check_non_collinear(positions[trial]):
            return AnchorSelection(tuple(trial), "ok")
    return AnchorSelection(tuple(chosen), "collinear")


@dataclass(frozen=True)
class LocalizationRow:
    node_id: int
    true_position: tuple
    estimate: Optional[tuple]
    anchors_used: int
    residual_rms: Optional[float]
    status: str
