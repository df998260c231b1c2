"""Vanilla policy gradient: REINFORCE with return-to-go and a mean baseline."""

from __future__ import annotations

import numpy as np

from vlkrl.policy.nets import AdamState, Mlp, adam_step, log_softmax
from vlkrl.policy.ppo import Trajectory


def returns_to_go(rewards: np.ndarray, gamma: float = 1.0) -> np.ndarray:
    out = np.zeros_like(rewards, dtype=np.float64)
    acc = 0.0
    for t in reversed(range(len(rewards))):
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out


def pg_gradients(
    policy: Mlp, trajectories: list[Trajectory], gamma: float = 1.0,
) -> tuple[list[np.ndarray], dict]:
    """Gradient of the negated REINFORCE objective (for a minimizing step)."""
    observations, actions, weights = [], [], []
    for trajectory in trajectories:
        if not trajectory.steps:
            continue
        observations.append(trajectory.observations())
        actions.extend(s.action for s in trajectory.steps)
        weights.append(returns_to_go(trajectory.rewards(), gamma))
    if not observations:
        raise ValueError("no steps to update from")
    X = np.concatenate(observations)
    A = np.array(actions, dtype=np.int64)
    G = np.concatenate(weights)
    baseline = float(G.mean())
    centered = G - baseline

    logits, cache = policy.forward(X)
    log_probs = log_softmax(logits)
    probs = np.exp(log_probs)
    n = len(A)
    one_hot = np.zeros_like(probs)
    one_hot[np.arange(n), A] = 1.0
    # ascent direction: E[(G - b) * grad log pi]; negate for the minimizer
    dlogits = -(centered[:, None] * (one_hot - probs)) / n
    grads = policy.backward(cache, dlogits)
    objective = float(np.mean(centered * log_probs[np.arange(n), A]))
    return grads, {"objective": objective, "baseline": baseline}


def pg_update(
    policy: Mlp, trajectories: list[Trajectory], adam: AdamState,
    gamma: float = 1.0,
) -> dict:
    grads, diagnostics = pg_gradients(policy, trajectories, gamma)
    adam_step(policy, grads, adam)
    return diagnostics
