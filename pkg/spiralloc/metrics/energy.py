# spiralloc/metrics/energy.py
"""Energy ledger kept in integer nanojoules."""
from dataclasses import dataclass

from spiralloc.errors import ParameterError
from spiralloc.logging_config import get_logger

logger = get_logger("metrics.energy")

NANO = 1_000_000_000
ANCHOR = "anchor"


def to_nanojoules(joules):
    return int(round(joules * NANO))


@dataclass(frozen=True)
class EnergyEvent:
    time: float
    actor: object
    kind: str
    nanojoules: int


class EnergyLedger:
    """
    Per-node and anchor energy accounts with an event log.

    Every accepted charge is logged with the same integer amount it adds to
    its account, so the log always sums to the account totals.
    """

    def __init__(self, node_count, energy_initial, energy_tx, energy_move):
        self.capacity_nj = to_nanojoules(energy_initial)
        self.energy_tx = energy_tx
        self.energy_move = energy_move
        self.node_spent_nj = [0] * node_count
        self.depleted = [False] * node_count
        self.anchor_tx_nj = 0
        self.anchor_move_nj = 0
        self.beacons = 0
        self.meters = 0.0
        self.events = []

    def tx_cost_nj(self, bits):
        return to_nanojoules(bits * self.energy_tx)

    def record_tx(self, actor, bits, time=0.0):
        """
        Charge one transmission.

        Args:
            actor: ANCHOR or a node id
            bits: Packet size
            time: Simulation time of the event

        Returns:
            True when charged; False when the node would exceed its budget
            (the node is marked depleted and the event refused)
        """
        if bits < 0:
            raise ParameterError(f"bits must be >= 0, got {bits}")
        cost = self.tx_cost_nj(bits)
        if actor == ANCHOR:
            self.anchor_tx_nj += cost
            self.beacons += 1
            self.events.append(EnergyEvent(time, ANCHOR, "beacon", cost))
            return True
        if self.depleted[actor] or self.node_spent_nj[actor] + cost > self.capacity_nj:
            if not self.depleted[actor]:
                logger.debug(f"Node {actor} depleted at t={time:.1f}")
            self.depleted[actor] = True
            return False
        self.node_spent_nj[actor] += cost
        self.events.append(EnergyEvent(time, actor, "forward", cost))
        return True

    def record_move(self, meters, time=0.0):
        """Charge anchor motion; returns the nanojoules added."""
        if meters < 0:
            raise ParameterError(f"meters must be >= 0, got {meters}")
        self.meters += meters
        total = to_nanojoules(self.meters * self.energy_move)
        added = total - self.anchor_move_nj
        self.anchor_move_nj = total
        if added:
            self.events.append(EnergyEvent(time, ANCHOR, "move", added))
        return added

    @property
    def node_total_nj(self):
        return sum(self.node_spent_nj)

    @property
    def total_nj(self):
        return self.node_total_nj + self.anchor_tx_nj + self.anchor_move_nj

    @property
    def total_j(self):
        return self.total_nj / NANO

    def node_spent_j(self):
        return [nj / NANO for nj in self.node_spent_nj]

    def logged_nj(self):
        return sum(event.nanojoules for event in self.events)
