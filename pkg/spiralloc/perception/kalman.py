# spiralloc/perception/kalman.py
"""Constant-velocity Kalman tracking of moving obstacles."""
from dataclasses import dataclass, replace

import numpy as np

from spiralloc.errors import NumericalError, ParameterError
from spiralloc.logging_config import get_logger

logger = get_logger("perception.kalman")

ACCEL_SIGMA = 0.5
MEASUREMENT_NOISE = np.diag([0.25, 0.25])
INITIAL_COVARIANCE = np.eye(4)
TRACK_TIMEOUT = 5.0

H = np.array([[1.0, 0.0, 0.0, 0.0],
              [0.0, 1.0, 0.0, 0.0]])


@dataclass(frozen=True)
class KalmanTrack:
    obstacle_id: str
    state: np.ndarray
    covariance: np.ndarray
    last_update: float = 0.0

    @property
    def position(self):
        return (float(self.state[0]), float(self.state[1]))

    @property
    def velocity(self):
        return (float(self.state[2]), float(self.state[3]))


def new_track(obstacle_id, position, time=0.0):
    """Track born at its first sighting with zero velocity."""
    state = np.array([position[0], position[1], 0.0, 0.0], dtype=float)
    return KalmanTrack(obstacle_id, state, INITIAL_COVARIANCE.copy(), time)


def transition(dt):
    F = np.eye(4)
    F[0, 2] = F[1, 3] = dt
    return F


def process_noise(dt, sigma=ACCEL_SIGMA):
    """White-acceleration process noise for the [x, y, vx, vy] state."""
    q = sigma ** 2
    Q = np.zeros((4, 4))
    Q[0, 0] = Q[1, 1] = q * dt ** 4 / 4.0
    Q[0, 2] = Q[2, 0] = Q[1, 3] = Q[3, 1] = q * dt ** 3 / 2.0
    Q[2, 2] = Q[3, 3] = q * dt ** 2
    return Q


def _symmetrize(P):
    return (P + P.T) / 2.0


def kf_predict(track, dt, sigma=ACCEL_SIGMA):
    """
    Propagate a track by dt under constant velocity.

    Args:
        track: KalmanTrack
        dt: Step in seconds, > 0
        sigma: Acceleration noise; 0 disables process noise

    Returns:
        New KalmanTrack
    """
    if not dt > 0:
        raise ParameterError(f"predict step must be > 0, got {dt}")
    F = transition(dt)
    state = F @ track.state
    covariance = _symmetrize(F @ track.covariance @ F.T + process_noise(dt, sigma))
    return replace(track, state=state, covariance=covariance)


def kf_update(track, measurement, noise=MEASUREMENT_NOISE, time=None):
    """
    Fuse a position measurement into a track.

    Args:
        track: KalmanTrack
        measurement: Measured (x, y)
        noise: 2x2 measurement covariance
        time: Measurement time recorded as the last update

    Returns:
        New KalmanTrack

    Raises:
        NumericalError: innovation covariance is singular
    """
    z = np.asarray(measurement, dtype=float)
    P = track.covariance
    S = H @ P @ H.T + np.asarray(noise, dtype=float)
    try:
        np.linalg.cholesky(S)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"innovation covariance of track {track.obstacle_id} is not positive-definite") from e
    K = np.linalg.solve(S, H @ P).T
    innovation = z - H @ track.state
    state = track.state + K @ innovation
    # Joseph form keeps P positive-definite.
    I_KH = np.eye(4) - K @ H
    covariance = _symmetrize(I_KH @ P @ I_KH.T + K @ np.asarray(noise, dtype=float) @ K.T)
    return replace(track, state=state, covariance=covariance,
                   last_update=track.last_update if time is None else time)


def forecast(track, horizon, dt):
    """
    Predicted positions at dt-spaced times up to the horizon.

    Args:
        track: KalmanTrack (left untouched)
        horizon: Lookahead in seconds, > 0
        dt: Spacing in seconds

    Returns:
        List of (x, y)
    """
    if not horizon > 0:
        raise ParameterError(f"forecast horizon must be > 0, got {horizon}")
    steps = int(round(horizon / dt))
    positions = []
    current = track
    for _ in range(max(steps, 1)):
        current = kf_predict(current, dt)
        positions.append(current.position)
    return positions


class ObstacleTracker:
    """Per-run set of tracks keyed by obstacle id."""

    def __init__(self, noise=MEASUREMENT_NOISE, timeout=TRACK_TIMEOUT):
        self.noise = noise
        self.timeout = timeout
        self.tracks = {}

    def step(self, time, dt, detections):
        """
        Predict every track, fuse detections, and drop stale tracks.

        Args:
            time: Current simulation time
            dt: Time since the previous step
            detections: Mapping obstacle id -> measured (x, y)

        Returns:
            Mapping obstacle id -> KalmanTrack
        """
        if dt > 0:
            self.tracks = {k: kf_predict(t, dt) for k, t in self.tracks.items()}
        for obstacle_id, position in detections.items():
            track = self.tracks.get(obstacle_id)
            if track is None:
                self.tracks[obstacle_id] = new_track(obstacle_id, position, time)
                logger.debug(f"Track born for {obstacle_id} at t={time:.1f}")
            else:
                self.tracks[obstacle_id] = kf_update(track, position, self.noise, time)
        for obstacle_id in [k for k, t in self.tracks.items() if time - t.last_update > self.timeout]:
            del self.tracks[obstacle_id]
            logger.debug(f"Track for {obstacle_id} expired at t={time:.1f}")
        return dict(self.tracks)
