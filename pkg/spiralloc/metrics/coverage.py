# spiralloc/metrics/coverage.py
import math

import numpy as np

from spiralloc.locnet.multilateration import COLLINEARITY_EPS


class CoverageTracker:
    """
    Online count of nodes that have received beacons from at least three
    non-collinear positions, plus a running position guess per node from the
    beacons it heard directly.
    """

    def __init__(self, node_count, eps=COLLINEARITY_EPS):
        self.eps = eps
        self.first = [None] * node_count
        self.second = [None] * node_count
        self.covered = np.zeros(node_count, dtype=bool)
        self.direct_sum = np.zeros((node_count, 2))
        self.direct_count = np.zeros(node_count, dtype=int)

    @property
    def n_covered(self):
        return int(self.covered.sum())

    def _receive(self, node, position):
        if self.covered[node]:
            return False
        p0 = self.first[node]
        if p0 is None:
            self.first[node] = position
            return False
        p1 = self.second[node]
        if p1 is None:
            if position != p0:
                self.second[node] = position
            return False
        # All points so far lie on the line p0-p1.
        cross = (p1[0] - p0[0]) * (position[1] - p0[1]) - (p1[1] - p0[1]) * (position[0] - p0[0])
        scale = max(math.dist(p0, p1), math.dist(p0, position), math.dist(p1, position)) ** 2
        if abs(cross) > self.eps * scale:
            self.covered[node] = True
            return True
        if math.dist(p0, position) > math.dist(p0, p1):
            self.second[node] = position
        return False

    def receive_beacon(self, position, hops):
        """
        Register one flood result.

        Args:
            position: Broadcast position
            hops: Per-node hop counts (>= 1 where received)

        Returns:
            Number of nodes newly covered
        """
        position = (float(position[0]), float(position[1]))
        received = np.nonzero(np.asarray(hops) >= 1)[0]
        newly = sum(self._receive(int(node), position) for node in received)
        direct = np.nonzero(np.asarray(hops) == 1)[0]
        self.direct_sum[direct] += position
        self.direct_count[direct] += 1
        return newly

    def running_rmse(self, true_positions):
        """RMSE of the direct-beacon centroid guesses over covered nodes; 0 when none."""
        mask = self.covered & (self.direct_count > 0)
        if not mask.any():
            return 0.0
        guesses = self.direct_sum[mask] / self.direct_count[mask, None]
        errors = np.asarray(true_positions, dtype=float)[mask] - guesses
        return float(np.sqrt(np.mean(np.sum(errors ** 2, axis=1))))
