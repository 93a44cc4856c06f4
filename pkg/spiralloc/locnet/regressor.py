# spiralloc/locnet/regressor.py
"""Recurrent hop-distance regressor correcting the classic hop-count × hop-size estimate."""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from spiralloc.errors import TrainingDivergedError, UsageError
from spiralloc.logging_config import get_logger
from spiralloc.nn.checkpoint import load_checkpoint, save_checkpoint
from spiralloc.nn.layers import Dense, Network, Recurrent
from spiralloc.nn.optim import Adam, all_finite

logger = get_logger("locnet.regressor")

CHECKPOINT_KIND = "distance-regressor"
HIDDEN = 16
FEATURES = 3
STEPS = 2


@dataclass(frozen=True)
class RegressorSettings:
    epochs: int = 40
    batch_size: int = 64
    lr: float = 3e-3
    validation_fraction: float = 0.2
    max_samples: int = 4000


def pair_features(hops, hop_sizes, contexts):
    """
    Feature sequences for the regressor.

    Step one carries the hop geometry (h, HopSize, h·HopSize), step two the
    anchor context (local degree, global degree, density estimate).

    Args:
        hops: Array (n,)
        hop_sizes: Array (n,)
        contexts: Array (n, 3)

    Returns:
        Array (n, 2, 3)
    """
    hops = np.asarray(hops, dtype=float)
    hop_sizes = np.asarray(hop_sizes, dtype=float)
    geometry = np.column_stack([hops, hop_sizes, hops * hop_sizes])
    return np.stack([geometry, np.asarray(contexts, dtype=float).reshape(-1, FEATURES)], axis=1)


class DistanceRegressor:
    """Elman encoder over the two-step feature sequence and a linear head, predicting distance / diagonal."""

    def __init__(self, rng, field_diagonal, hidden=HIDDEN):
        self.field_diagonal = float(field_diagonal)
        self.network = Network(
            encoder=Recurrent(FEATURES, hidden, rng),
            head=Dense(hidden, 1, rng, activation=None),
        )
        self.feature_mean = np.zeros((STEPS, FEATURES))
        self.feature_std = np.ones((STEPS, FEATURES))
        self.trained = False

    def _normalize(self, features):
        return (np.asarray(features, dtype=float) - self.feature_mean) / self.feature_std

    def forward(self, features):
        encoder, head = self.network.layers["encoder"], self.network.layers["head"]
        hidden, enc_cache = encoder.forward(self._normalize(features))
        out, head_cache = head.forward(hidden)
        return out[:, 0], (enc_cache, head_cache)

    def loss_and_grads(self, features, targets):
        """
        Mean squared error on normalised targets and its parameter gradients.

        Args:
            features: Array (n, 2, 3)
            targets: True distances in metres, array (n,)

        Returns:
            (loss, grads keyed like network.parameters())
        """
        encoder, head = self.network.layers["encoder"], self.network.layers["head"]
        prediction, (enc_cache, head_cache) = self.forward(features)
        error = prediction - np.asarray(targets, dtype=float) / self.field_diagonal
        loss = float(np.mean(error ** 2))
        grad_out = (2.0 / len(error)) * error[:, None]
        grad_hidden, head_grads = head.backward(grad_out, head_cache)
        _, enc_grads = encoder.backward(grad_hidden, enc_cache)
        return loss, Network.prefixed({"encoder": enc_grads, "head": head_grads})

    def predict(self, features):
        if not self.trained:
            raise UsageError("distance regressor used before training")
        prediction, _ = self.forward(features)
        return np.clip(prediction * self.field_diagonal, 0.0, self.field_diagonal)

    def save(self, path, report=None):
        tensors = dict(self.network.parameters())
        tensors["feature_mean"] = self.feature_mean
        tensors["feature_std"] = self.feature_std
        save_checkpoint(path, CHECKPOINT_KIND, tensors,
                        {"field_diagonal": self.field_diagonal, "hidden": self.network.layers["encoder"].hidden,
                         "report": report or {}})

    @classmethod
    def load(cls, path):
        tensors, metadata = load_checkpoint(path, CHECKPOINT_KIND)
        regressor = cls(np.random.default_rng(0), metadata["field_diagonal"], int(metadata["hidden"]))
        regressor.network.load_parameters(tensors)
        regressor.feature_mean = tensors["feature_mean"]
        regressor.feature_std = tensors["feature_std"]
        regressor.trained = True
        return regressor


def predict_distance(regressor, hops, hop_sizes, contexts, allow_fallback=True):
    """
    Anchor-to-node distance estimates.

    Args:
        regressor: Trained DistanceRegressor, or None for the classic product
        hops: Hop counts (defined)
        hop_sizes: HopSize of each anchor
        contexts: Anchor context rows
        allow_fallback: Whether an untrained regressor may fall back to h·HopSize

    Returns:
        Array of distances in metres
    """
    hops = np.asarray(hops, dtype=float)
    hop_sizes = np.asarray(hop_sizes, dtype=float)
    if regressor is None or not regressor.trained:
        if regressor is not None and not allow_fallback:
            raise UsageError("untrained distance regressor invoked without fallback")
        return hops * hop_sizes
    return regressor.predict(pair_features(hops, hop_sizes, contexts))


@dataclass(frozen=True)
class RegressorFit:
    regressor: Optional[DistanceRegressor]
    train_rmse: float
    validation_rmse: float
    fallback_rmse: float
    initial_validation_rmse: float

    @property
    def retained(self):
        return self.regressor is not None

    def as_dict(self):
        return {
            "train_rmse_m": self.train_rmse,
            "validation_rmse_m": self.validation_rmse,
            "fallback_rmse_m": self.fallback_rmse,
            "initial_validation_rmse_m": self.initial_validation_rmse,
            "retained": self.retained,
        }


def _rmse(a, b):
    return float(np.sqrt(np.mean((np.asarray(a) - np.asarray(b)) ** 2)))


def train_regressor(features, targets, rng, field_diagonal, settings=RegressorSettings()):
    """
    Fit a DistanceRegressor and keep it only if it beats the classic product on validation data.

    Args:
        features: Array (n, 2, 3) from pair_features
        targets: True distances, array (n,)
        rng: numpy Generator (initialisation, shuffling, subsampling)
        field_diagonal: Output scale and clamp in metres
        settings: RegressorSettings

    Returns:
        RegressorFit; ``regressor`` is None when the fallback was retained

    Raises:
        TrainingDivergedError: non-finite loss, or validation error above its initial value
    """
    features = np.asarray(features, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if len(targets) < 2:
        raise UsageError("regressor training needs at least two samples")
    if len(targets) > settings.max_samples:
        keep = np.sort(rng.choice(len(targets), size=settings.max_samples, replace=False))
        features, targets = features[keep], targets[keep]

    order = rng.permutation(len(targets))
    n_val = max(1, int(round(settings.validation_fraction * len(targets))))
    val_idx, train_idx = order[:n_val], order[n_val:]
    if len(train_idx) == 0:
        train_idx = val_idx

    regressor = DistanceRegressor(rng, field_diagonal)
    regressor.feature_mean = features[train_idx].mean(axis=0)
    regressor.feature_std = np.where(features[train_idx].std(axis=0) > 1e-12, features[train_idx].std(axis=0), 1.0)

    params = regressor.network.parameters()
    optimizer = Adam(params, lr=settings.lr)

    def validation_rmse():
        prediction, _ = regressor.forward(features[val_idx])
        return _rmse(np.clip(prediction * field_diagonal, 0.0, field_diagonal), targets[val_idx])

    initial = validation_rmse()
    for epoch in range(settings.epochs):
        shuffled = rng.permutation(train_idx)
        for start in range(0, len(shuffled), settings.batch_size):
            batch = shuffled[start:start + settings.batch_size]
            loss, grads = regressor.loss_and_grads(features[batch], targets[batch])
            if not np.isfinite(loss) or not all_finite(*grads.values()):
                logger.error(f"Regressor loss diverged at epoch {epoch}")
                raise TrainingDivergedError(f"regressor loss became non-finite at epoch {epoch}")
            optimizer.step(grads)

    final = validation_rmse()
    if final > initial:
        raise TrainingDivergedError(
            f"regressor validation RMSE rose from {initial:.3f} m to {final:.3f} m"
        )
    prediction, _ = regressor.forward(features[train_idx])
    train = _rmse(np.clip(prediction * field_diagonal, 0.0, field_diagonal), targets[train_idx])
    fallback = _rmse(features[val_idx, 0, 2], targets[val_idx])
    regressor.trained = True

    if final <= fallback:
        logger.debug(f"Regressor retained: validation RMSE {final:.3f} m vs fallback {fallback:.3f} m")
        return RegressorFit(regressor, train, final, fallback, initial)
    logger.warning(f"Regressor validation RMSE {final:.3f} m worse than fallback {fallback:.3f} m; fallback retained")
    return RegressorFit(None, train, final, fallback, initial)
