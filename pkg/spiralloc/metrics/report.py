# spiralloc/metrics/report.py
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from spiralloc.metrics.energy import NANO
from spiralloc.reporting.store import clean_number

ABRUPT_TURN = math.pi / 4
METRIC_KEYS = ["rmse_m", "e_norm_j", "eer", "coverage_pct", "eta_traj", "l_actual_m", "t_actual_s", "n_cov", "n_total"]


def rmse(true_positions, estimates):
    """
    Root mean square localization error.

    Args:
        true_positions: Array (n, 2)
        estimates: Array (n, 2), matched row by row

    Returns:
        RMSE in metres, or None when no node is localized
    """
    truth = np.asarray(true_positions, dtype=float).reshape(-1, 2)
    est = np.asarray(estimates, dtype=float).reshape(-1, 2)
    if len(truth) == 0:
        return None
    return float(np.sqrt(np.mean(np.sum((truth - est) ** 2, axis=1))))


def energy_metrics(ledger):
    """(E_norm, EER) from a ledger; (None, None) when no beacon was sent."""
    if ledger.beacons == 0 or ledger.total_nj == 0:
        return None, None
    e_norm = ledger.total_nj / NANO / ledger.beacons
    return e_norm, ledger.beacons * NANO / ledger.total_nj


def coverage(n_cov, n_total):
    return 100.0 * n_cov / n_total


def trajectory_efficiency(ideal_length, ideal_time, actual_length, actual_time):
    """(L_ideal × T_ideal) / (L_actual × T_actual); None when any factor is zero."""
    if min(ideal_length, ideal_time, actual_length, actual_time) <= 0:
        return None
    return (ideal_length * ideal_time) / (actual_length * actual_time)


def path_smoothness(headings):
    """
    Cumulative absolute heading change and count of abrupt turns.

    Args:
        headings: Heading of each tick in which the anchor moved

    Returns:
        (total change in radians, number of changes above pi/4)
    """
    if len(headings) < 2:
        return 0.0, 0
    deltas = np.abs(np.angle(np.exp(1j * np.diff(np.asarray(headings, dtype=float)))))
    return float(deltas.sum()), int(np.sum(deltas > ABRUPT_TURN + 1e-12))


def significant(value, digits=6):
    if value is None:
        return None
    return float(f"{value:.{digits}g}")


@dataclass(frozen=True)
class MetricsReport:
    rmse_m: Optional[float]
    e_norm_j: Optional[float]
    eer: Optional[float]
    coverage_pct: float
    eta_traj: Optional[float]
    l_actual_m: float
    t_actual_s: float
    n_cov: int
    n_total: int
    seed: int
    e_total_j: float
    n_beacons: int
    incomplete: bool
    detours: int
    skipped_waypoints: int
    collisions: int
    total_reward: float
    heading_change_rad: float
    abrupt_turns: int

    def to_dict(self):
        data = {key: clean_number(value) for key, value in asdict(self).items()}
        data["e_norm_j"] = significant(data["e_norm_j"])
        data["e_total_j"] = significant(data["e_total_j"])
        return data
