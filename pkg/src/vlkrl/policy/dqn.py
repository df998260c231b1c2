"""DQN backbone: replay buffer, one-step TD updates, target syncing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from vlkrl.policy.nets import AdamState, Mlp, adam_step


@dataclass
class Transition:
    observation: np.ndarray
    action: int
    reward: float
    next_observation: np.ndarray
    terminal: bool


class ReplayBuffer:
    def __init__(self, capacity: int, rng: np.random.Generator):
        self.capacity = capacity
        self.rng = rng
        self._items: list[Transition] = []
        self._write = 0

    def push(self, transition: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(transition)
        else:
            self._items[self._write] = transition
            self._write = (self._write + 1) % self.capacity

    def sample(self, batch_size: int) -> list[Transition]:
        indices = self.rng.integers(0, len(self._items), size=batch_size)
        return [self._items[i] for i in indices]

    def __len__(self) -> int:
        return len(self._items)


def dqn_update(
    qnet: Mlp,
    target_net: Mlp,
    batch: list[Transition],
    gamma: float,
    adam: AdamState,
) -> float:
    """One squared-error step toward r + gamma * max_a' Q_target(s', a').

    Terminal transitions bootstrap nothing: their target is the bare
    reward. Returns the batch loss.
    """
    observations = np.stack([t.observation for t in batch])
    actions = np.array([t.action for t in batch], dtype=np.int64)
    rewards = np.array([t.reward for t in batch], dtype=np.float64)
    next_observations = np.stack([t.next_observation for t in batch])
    terminal = np.array([t.terminal for t in batch], dtype=bool)

    next_q = target_net.forward(next_observations)[0]
    targets = rewards + np.where(terminal, 0.0, gamma * next_q.max(axis=1))

    q_values, cache = qnet.forward(observations)
    n = len(batch)
    selected = q_values[np.arange(n), actions]
    residual = selected - targets
    loss = float(np.mean(residual ** 2))

    dq = np.zeros_like(q_values)
    dq[np.arange(n), actions] = 2.0 * residual / n
    grads = qnet.backward(cache, dq)
    adam_step(qnet, grads, adam)
    return loss


def sync_target(qnet: Mlp, target_net: Mlp) -> None:
    target_net.set_flat(qnet.get_flat())
