# spiralloc/sim/training.py
"""Episodic TD3 training of the detour policy and pooled training of the distance regressor."""
import copy
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from spiralloc.agent.policy import Learner, Td3Policy
from spiralloc.agent.replay import ReplayBuffer
from spiralloc.agent.td3 import PolicyBundle, TD3Config
from spiralloc.errors import ParameterError, TrainingDivergedError, UsageError
from spiralloc.locnet.regressor import RegressorSettings, train_regressor
from spiralloc.logging_config import get_logger
from spiralloc.sim.engine import run_scenario
from spiralloc.sim.rng import make_rng
from spiralloc.world.model import build_world

logger = get_logger("sim.training")

CURRICULA = ("random", "fixed")
CHECKPOINT_EVERY = 10
REWARD_CURVE_COLUMNS = ["episode", "seed", "total_reward", "updates", "detours", "coverage_pct", "rmse_m"]


@dataclass
class TrainingOutcome:
    bundle: PolicyBundle
    reward_curve: pd.DataFrame
    regressor_fit: Optional[object]
    updates: int


def episode_config(config, episode, curriculum):
    """Scenario of one episode; a random curriculum draws a fresh world per episode."""
    if curriculum not in CURRICULA:
        raise UsageError(f"unknown curriculum '{curriculum}', expected one of {', '.join(CURRICULA)}")
    seed = config.seed + episode if curriculum == "random" else config.seed
    return config.with_overrides(seed=seed, policy="td3", hop_model="dvhop")


def train_loop(config, episodes, store=None, curriculum="random", td3=TD3Config(),
               regressor_settings=RegressorSettings(), checkpoint_every=CHECKPOINT_EVERY):
    """
    Train the detour policy over whole coverage passes.

    Every episode runs the simulator with exploration noise; detour ticks
    feed the replay buffer and trigger TD3 updates after warm-up. The policy
    checkpoint is written every ``checkpoint_every`` episodes and at the end.
    Anchor-pair samples of all episodes train one distance regressor.

    Args:
        config: Base ScenarioConfig (seed fixes every draw)
        episodes: Number of episodes (>= 1)
        store: ResultStore for policy.ckpt, regressor.ckpt and reward_curve.csv
        curriculum: "random" (new world each episode) or "fixed"
        td3: TD3Config
        regressor_settings: RegressorSettings of the pooled regressor
        checkpoint_every: Episodes between policy checkpoints

    Returns:
        TrainingOutcome

    Raises:
        TrainingDivergedError: a loss became non-finite; the last good policy is saved first
    """
    if episodes < 1:
        raise ParameterError(f"episodes must be >= 1, got {episodes}")
    bundle = PolicyBundle.create(make_rng(config.seed, "policy-init"), td3)
    learner = Learner(ReplayBuffer(td3.buffer_capacity, td3.history), make_rng(config.seed, "td3"),
                      td3.warmup, td3.batch_size)
    last_good = copy.deepcopy(bundle)
    curve = []
    features, targets = [], []
    diagonal = 0.0

    logger.info(f"Training for {episodes} episodes ({curriculum} curriculum) from seed {config.seed}")
    for episode in range(episodes):
        ep_config = episode_config(config, episode, curriculum)
        world = build_world(ep_config)
        diagonal = max(diagonal, world.field.diagonal)
        policy = Td3Policy(bundle, make_rng(config.seed, "exploration", episode), learner)
        try:
            result = run_scenario(ep_config, policy, world, run_index=episode, keep_pair_samples=True)
        except TrainingDivergedError:
            logger.error(f"Training diverged in episode {episode}; keeping the last good policy")
            if store is not None:
                last_good.save(store.path("policy.ckpt"), {"episode": episode, "diverged": True})
            raise
        metrics = result.metrics
        curve.append((episode, ep_config.seed, metrics.total_reward, len(learner.reports), metrics.detours,
                      metrics.coverage_pct, metrics.rmse_m))
        samples = result.localization.pair_samples
        if samples is not None:
            features.append(samples[0])
            targets.append(samples[1])
        last_good = copy.deepcopy(bundle)
        logger.info(f"Episode {episode}: reward {metrics.total_reward:.3f}, {len(learner.reports)} updates, "
                    f"{metrics.detours} detours")
        if store is not None and (episode + 1) % checkpoint_every == 0:
            bundle.save(store.path("policy.ckpt"), {"episode": episode + 1})

    reward_curve = pd.DataFrame(curve, columns=REWARD_CURVE_COLUMNS)
    fit = None
    if targets and sum(len(t) for t in targets) >= 2:
        try:
            fit = train_regressor(np.concatenate(features), np.concatenate(targets),
                                  make_rng(config.seed, "regressor-train"), diagonal, regressor_settings)
        except TrainingDivergedError as e:
            logger.warning(f"Pooled regressor training failed: {e}")
    if store is not None:
        bundle.save(store.path("policy.ckpt"), {"episode": episodes})
        store.write_frame("reward_curve.csv", reward_curve)
        if fit is not None and fit.retained:
            fit.regressor.save(store.path("regressor.ckpt"), fit.as_dict())
        elif fit is not None:
            logger.warning("Pooled regressor did not beat the hop-size fallback; regressor.ckpt not written")
    return TrainingOutcome(bundle, reward_curve, fit, len(learner.reports))
