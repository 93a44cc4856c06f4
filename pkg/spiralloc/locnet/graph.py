# spiralloc/locnet/graph.py
"""Disk connectivity graph, beacon flooding and virtual-anchor hop sizes."""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from spiralloc.logging_config import get_logger

logger = get_logger("locnet.graph")

UNREACHABLE = -1


@dataclass(frozen=True)
class ConnectivityGraph:
    positions: np.ndarray
    comm_range: float
    adjacency: sparse.csr_matrix
    tree: cKDTree

    @property
    def node_count(self):
        return len(self.positions)

    def neighbours(self, node):
        return self.adjacency.indices[self.adjacency.indptr[node]:self.adjacency.indptr[node + 1]]

    def degrees(self):
        return np.diff(self.adjacency.indptr)

    def within_range(self, point):
        """Node ids within comm range of a point, ascending."""
        return np.array(sorted(self.tree.query_ball_point(point, self.comm_range)), dtype=int)


@dataclass(frozen=True)
class FloodResult:
    hops: np.ndarray
    forwarders: tuple


def build_graph(positions, comm_range):
    """
    Disk graph over node positions: an edge iff distance <= comm range.

    Args:
        positions: Array (N, 2)
        comm_range: R in metres

    Returns:
        ConnectivityGraph
    """
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    n = len(positions)
    tree = cKDTree(positions)
    pairs = tree.query_pairs(comm_range, output_type="ndarray")
    if len(pairs):
        rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
        cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
        data = np.ones(len(rows), dtype=np.int8)
    else:
        rows = cols = np.array([], dtype=int)
        data = np.array([], dtype=np.int8)
    adjacency = sparse.csr_matrix((data, (rows, cols)), shape=(n, n))
    adjacency.sort_indices()
    return ConnectivityGraph(positions, float(comm_range), adjacency, tree)


def flood_hops(graph, beacon_position, relay: Optional[Callable[[int], bool]] = None):
    """
    Minimum hop counts from one beacon broadcast.

    Nodes within comm range of the broadcast position receive it at hop 1;
    every node rebroadcasts once on first receipt, level by level in
    ascending id order. A node refused by ``relay`` (e.g. depleted) still
    records its hop count but does not forward.

    Args:
        graph: ConnectivityGraph
        beacon_position: Broadcast position
        relay: Optional callback deciding whether a node forwards

    Returns:
        FloodResult with hops (UNREACHABLE where never reached) and the forwarding nodes in order
    """
    hops = np.full(graph.node_count, UNREACHABLE, dtype=int)
    frontier = graph.within_range(beacon_position)
    hops[frontier] = 1
    level = 1
    forwarders = []
    while frontier.size:
        forwarding = [int(n) for n in frontier if relay is None or relay(int(n))]
        forwarders.extend(forwarding)
        if not forwarding:
            break
        reached = np.unique(graph.adjacency[forwarding].indices)
        frontier = reached[hops[reached] == UNREACHABLE]
        level += 1
        hops[frontier] = level
    return FloodResult(hops, tuple(forwarders))


def anchor_pair_hops(hop_table, seed_sets):
    """
    Hop counts between every pair of virtual anchors.

    h_ij = 1 + min over nodes n within range of anchor i of hops(n, j),
    symmetrized with the minimum of both directions.

    Args:
        hop_table: Array (B, N) of per-beacon node hop counts, UNREACHABLE where unreached
        seed_sets: Sequence of B arrays, the nodes within range of each broadcast

    Returns:
        Array (B, B) of pair hops, UNREACHABLE where undefined and on the diagonal
    """
    hop_table = np.asarray(hop_table)
    count = hop_table.shape[0]
    reach = np.where(hop_table == UNREACHABLE, np.inf, hop_table.astype(float))
    pair = np.full((count, count), np.inf)
    for i, seeds in enumerate(seed_sets):
        if len(seeds):
            pair[i] = 1.0 + reach[:, seeds].min(axis=1)
    pair = np.minimum(pair, pair.T)
    np.fill_diagonal(pair, np.inf)
    return np.where(np.isfinite(pair), pair, UNREACHABLE).astype(int)


def hop_size(anchor_positions, pair_hops):
    """
    Average metres per hop for each virtual anchor.

    HopSize_i = sum_j ||a_i - a_j|| / sum_j h_ij over the pairs with defined hops.

    Args:
        anchor_positions: Array (B, 2)
        pair_hops: Array (B, B) from anchor_pair_hops

    Returns:
        Array (B,) with NaN where no pair is defined
    """
    positions = np.asarray(anchor_positions, dtype=float)
    pair_hops = np.asarray(pair_hops)
    defined = pair_hops > 0
    distances = np.linalg.norm(positions[:, None, :] - positions[None, :, :], axis=2)
    total_distance = np.where(defined, distances, 0.0).sum(axis=1)
    total_hops = np.where(defined, pair_hops, 0).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        sizes = total_distance / total_hops
    return np.where(total_hops > 0, sizes, np.nan)


def anchor_context(graph, seed_sets, pair_hops):
    """
    Context features of each virtual anchor.

    (mean degree of the nodes within range of the anchor, global mean degree,
    obstacle-density estimate from the fraction of undefined anchor pairs)

    Returns:
        Array (B, 3)
    """
    degrees = graph.degrees().astype(float)
    global_mean = float(degrees.mean()) if len(degrees) else 0.0
    count = len(seed_sets)
    if count > 1:
        undefined = (np.asarray(pair_hops) == UNREACHABLE).sum() - count
        density_estimate = undefined / (count * (count - 1))
    else:
        density_estimate = 0.0
    local = np.array([degrees[s].mean() if len(s) else 0.0 for s in seed_sets])
    return np.column_stack([local, np.full(count, global_mean), np.full(count, density_estimate)])
