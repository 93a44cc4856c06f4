# spiralloc/agent/td3.py
"""Twin-delayed deterministic policy gradient over the numpy networks."""
import copy
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from spiralloc.agent.networks import ENCODER_HIDDEN, HEAD_HIDDEN, Actor, Critic
from spiralloc.agent.state import HISTORY
from spiralloc.errors import TrainingDivergedError
from spiralloc.logging_config import get_logger
from spiralloc.nn.checkpoint import load_checkpoint, save_checkpoint
from spiralloc.nn.optim import Adam, all_finite, polyak_update

logger = get_logger("agent.td3")

CHECKPOINT_KIND = "td3-policy"
_NETWORKS = ("actor", "critic1", "critic2", "actor_target", "critic1_target", "critic2_target")


@dataclass(frozen=True)
class TD3Config:
    gamma: float = 0.99
    tau: float = 0.005
    policy_delay: int = 2
    target_noise: float = 0.2
    noise_clip: float = 0.5
    batch_size: int = 64
    buffer_capacity: int = 100_000
    exploration_noise: float = 0.1
    actor_lr: float = 3e-4
    critic_lr: float = 3e-4
    warmup: int = 1000
    encoder_hidden: int = ENCODER_HIDDEN
    hidden: int = HEAD_HIDDEN
    history: int = HISTORY


@dataclass(frozen=True)
class UpdateReport:
    critic_loss: float
    actor_loss: Optional[float]
    critic_updates: int


class PolicyBundle:
    """Actor, twin critics, their targets and optimizers."""

    def __init__(self, actor, critic1, critic2, config=TD3Config()):
        self.config = config
        self.actor = actor
        self.critic1 = critic1
        self.critic2 = critic2
        self.actor_target = copy.deepcopy(actor)
        self.critic1_target = copy.deepcopy(critic1)
        self.critic2_target = copy.deepcopy(critic2)
        self.actor_optimizer = Adam(actor.network.parameters(), lr=config.actor_lr)
        self.critic1_optimizer = Adam(critic1.network.parameters(), lr=config.critic_lr)
        self.critic2_optimizer = Adam(critic2.network.parameters(), lr=config.critic_lr)
        self.critic_updates = 0
        self.actor_updates = 0

    @classmethod
    def create(cls, rng, config=TD3Config()):
        sizes = {"encoder_hidden": config.encoder_hidden, "hidden": config.hidden}
        return cls(Actor(rng, **sizes), Critic(rng, **sizes), Critic(rng, **sizes), config)

    def act(self, history, rng=None):
        """
        Unit action for one state history.

        Args:
            history: Array (steps, state_dim)
            rng: Exploration generator; None for the deterministic policy

        Returns:
            Array (2,) in [-1, 1]
        """
        action = self.actor(np.asarray(history, dtype=float)[None])[0]
        if rng is not None:
            action = action + rng.normal(0.0, self.config.exploration_noise, size=action.shape)
        return np.clip(action, -1.0, 1.0)

    def networks(self):
        return {name: getattr(self, name) for name in _NETWORKS}

    def save(self, path, metadata=None):
        tensors = {
            f"{name}.{key}": value
            for name, model in self.networks().items()
            for key, value in model.network.parameters().items()
        }
        meta = {"td3": asdict(self.config), "critic_updates": self.critic_updates,
                "actor_updates": self.actor_updates}
        meta.update(metadata or {})
        save_checkpoint(path, CHECKPOINT_KIND, tensors, meta)

    @classmethod
    def load(cls, path):
        tensors, metadata = load_checkpoint(path, CHECKPOINT_KIND)
        config = TD3Config(**metadata.get("td3", {}))
        bundle = cls.create(np.random.default_rng(0), config)
        for name, model in bundle.networks().items():
            prefix = f"{name}."
            model.network.load_parameters(
                {key[len(prefix):]: value for key, value in tensors.items() if key.startswith(prefix)}
            )
        bundle.critic_updates = int(metadata.get("critic_updates", 0))
        bundle.actor_updates = int(metadata.get("actor_updates", 0))
        return bundle


def critic_targets(bundle, batch, rng):
    """
    TD targets r + gamma (1 - done) min(Q1', Q2') under clipped target-policy noise.

    Args:
        bundle: PolicyBundle
        batch: ReplayBatch
        rng: Generator for the smoothing noise

    Returns:
        Array (batch,)
    """
    cfg = bundle.config
    next_action = bundle.actor_target(batch.next_states)
    noise = np.clip(rng.normal(0.0, cfg.target_noise, size=next_action.shape), -cfg.noise_clip, cfg.noise_clip)
    next_action = np.clip(next_action + noise, -1.0, 1.0)
    q1 = bundle.critic1_target(batch.next_states, next_action)
    q2 = bundle.critic2_target(batch.next_states, next_action)
    return batch.rewards + cfg.gamma * (1.0 - batch.dones) * np.minimum(q1, q2)


def critic_loss_and_grads(critic, states, actions, targets):
    q, cache = critic.forward(states, actions)
    error = q - targets
    loss = float(np.mean(error ** 2))
    grads, _ = critic.backward((2.0 / len(error)) * error, cache)
    return loss, grads


def actor_loss_and_grads(actor, critic, states):
    """
    Deterministic policy gradient: loss = -mean Q1(s, pi(s)).

    Returns:
        (loss, actor parameter grads)
    """
    action, actor_cache = actor.forward(states)
    q, critic_cache = critic.forward(states, action)
    loss = -float(np.mean(q))
    _, grad_action = critic.backward(np.full(len(q), -1.0 / len(q)), critic_cache)
    return loss, actor.backward(grad_action, actor_cache)


def _check(loss, grads, label, step):
    if not np.isfinite(loss) or not all_finite(*grads.values()):
        logger.error(f"{label} loss became non-finite at update {step}")
        raise TrainingDivergedError(f"{label} loss became non-finite at update {step}")


def td3_update(bundle, batch, rng):
    """
    One TD3 step: both critics regress on the shared target; every
    ``policy_delay`` critic steps the actor ascends Q1 and all targets are
    Polyak-averaged.

    Args:
        bundle: PolicyBundle (updated in place)
        batch: ReplayBatch
        rng: Generator for target smoothing noise

    Returns:
        UpdateReport

    Raises:
        TrainingDivergedError: a loss or gradient is non-finite
    """
    cfg = bundle.config
    targets = critic_targets(bundle, batch, rng)
    losses = []
    for critic, optimizer, label in ((bundle.critic1, bundle.critic1_optimizer, "critic1"),
                                     (bundle.critic2, bundle.critic2_optimizer, "critic2")):
        loss, grads = critic_loss_and_grads(critic, batch.states, batch.actions, targets)
        _check(loss, grads, label, bundle.critic_updates)
        optimizer.step(grads)
        losses.append(loss)
    bundle.critic_updates += 1

    actor_loss = None
    if bundle.critic_updates % cfg.policy_delay == 0:
        actor_loss, grads = actor_loss_and_grads(bundle.actor, bundle.critic1, batch.states)
        _check(actor_loss, grads, "actor", bundle.critic_updates)
        bundle.actor_optimizer.step(grads)
        bundle.actor_updates += 1
        for online, target in ((bundle.actor, bundle.actor_target), (bundle.critic1, bundle.critic1_target),
                               (bundle.critic2, bundle.critic2_target)):
            polyak_update(target.network.parameters(), online.network.parameters(), cfg.tau)
    return UpdateReport(float(np.mean(losses)), actor_loss, bundle.critic_updates)
