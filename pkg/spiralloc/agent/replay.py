# spiralloc/agent/replay.py
from typing import NamedTuple

import numpy as np

from spiralloc.agent.state import ACTION_DIM, HISTORY, STATE_DIM
from spiralloc.errors import ParameterError


class ReplayBatch(NamedTuple):
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray


class ReplayBuffer:
    """Fixed-capacity ring buffer of (history, action, reward, next history, done)."""

    def __init__(self, capacity, history=HISTORY, state_dim=STATE_DIM, action_dim=ACTION_DIM):
        if capacity < 1:
            raise ParameterError(f"replay capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self.states = np.zeros((self.capacity, history, state_dim))
        self.actions = np.zeros((self.capacity, action_dim))
        self.rewards = np.zeros(self.capacity)
        self.next_states = np.zeros((self.capacity, history, state_dim))
        self.dones = np.zeros(self.capacity)
        self.position = 0
        self.size = 0

    def push(self, state, action, reward, next_state, done):
        i = self.position
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.dones[i] = float(done)
        self.position = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size, rng):
        """Uniform sample without replacement inside the batch."""
        if batch_size > self.size:
            raise ParameterError(f"cannot sample {batch_size} transitions from {self.size}")
        idx = rng.choice(self.size, size=batch_size, replace=False)
        return ReplayBatch(self.states[idx], self.actions[idx], self.rewards[idx],
                           self.next_states[idx], self.dones[idx])

    def __len__(self):
        return self.size
