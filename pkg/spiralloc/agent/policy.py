# spiralloc/agent/policy.py
"""Detour policies as seen by the simulation engine."""
from dataclasses import dataclass, field

from spiralloc.agent.behaviour import DetourParams, heuristic_detour
from spiralloc.agent.replay import ReplayBuffer
from spiralloc.agent.state import AgentAction
from spiralloc.agent.td3 import td3_update
from spiralloc.errors import UsageError
from spiralloc.logging_config import get_logger

logger = get_logger("agent.policy")


@dataclass(frozen=True)
class DetourContext:
    state: object
    history: object
    world: object
    heading: float
    dt: float


class HeuristicPolicy:
    name = "heuristic"

    def __init__(self, params=DetourParams()):
        self.params = params
        self.side = None

    def reset(self):
        self.side = None

    def end_detour(self):
        self.side = None

    def act(self, ctx):
        action, self.side = heuristic_detour(ctx.state, ctx.world, ctx.heading, self.side, self.params)
        return action

    def record(self, history, action, next_history):
        pass

    def reward(self, value, done=False):
        pass


@dataclass
class Learner:
    """Replay buffer and update schedule of a policy being trained."""

    buffer: ReplayBuffer
    rng: object
    warmup: int
    batch_size: int
    reports: list = field(default_factory=list)

    def ready(self):
        return len(self.buffer) >= max(self.warmup, self.batch_size)


class Td3Policy:
    """
    Actor-driven detours.

    Without a learner the policy is the deterministic actor. With one, actions
    carry exploration noise, detour transitions wait for the next reward tick
    and a TD3 update runs every detour tick once the buffer passes warm-up.
    """

    name = "td3"

    def __init__(self, bundle, explore_rng=None, learner=None):
        if bundle is None:
            raise UsageError("td3 policy needs weights (weights_path) or a bundle in training")
        self.bundle = bundle
        self.explore_rng = explore_rng
        self.learner = learner
        self.pending = []

    def reset(self):
        self.pending = []

    def end_detour(self):
        pass

    def act(self, ctx):
        unit = self.bundle.act(ctx.history, self.explore_rng)
        return AgentAction.from_unit(unit, ctx.dt)

    def record(self, history, action, next_history):
        if self.learner is None:
            return
        self.pending.append((history, action, next_history))
        if self.learner.ready():
            batch = self.learner.buffer.sample(self.learner.batch_size, self.learner.rng)
            self.learner.reports.append(td3_update(self.bundle, batch, self.learner.rng))

    def reward(self, value, done=False):
        """Attach a reward tick to the transitions collected since the previous one."""
        if self.learner is None:
            return
        for i, (history, action, next_history) in enumerate(self.pending):
            last = done and i == len(self.pending) - 1
            self.learner.buffer.push(history, action, value, next_history, last)
        self.pending = []
