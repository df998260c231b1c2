"""PPO: clipped surrogate objective, GAE, update step, action selection.

The surrogate is an objective to maximize; ``ppo_update`` ascends it by
handing its negation to Adam. When the policy still equals the behavior
policy every ratio is exactly 1, so the objective equals the mean
advantage bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from vlkrl.policy.nets import AdamState, Mlp, adam_step, log_softmax, softmax


@dataclass(frozen=True)
class PPOConfig:
    """Training hyperparameters. Clip epsilon, gamma, and lambda keep
    standard defaults; epochs, batch size, and max dialogue length default
    to the reference regime (300 / 100 / 30)."""

    clip_epsilon: float = 0.2
    gamma: float = 0.99
    gae_lambda: float = 0.95
    learning_rate: float = 3e-3
    critic_learning_rate: float = 3e-3
    epochs: int = 300
    batch_size: int = 100
    max_dialogue_length: int = 30
    minibatch_epochs: int = 4
    minibatch_size: int = 64
    entropy_coef: float = 0.01
    kl_abort: float = 0.5
    normalize_advantages: bool = True
    hidden_sizes: tuple[int, ...] = (128, 128)

    def __post_init__(self):
        if self.clip_epsilon <= 0:
            raise ValueError("clip epsilon must be > 0")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")


@dataclass(frozen=True)
class TrajectoryStep:
    observation: np.ndarray
    action: int
    log_prob: float
    reward: float
    done: bool


@dataclass
class Trajectory:
    """One episode of (s', a, log pi, r) tuples plus its outcome label."""

    steps: list[TrajectoryStep] = field(default_factory=list)
    outcome: str = "failure"  # "all_domains" | "single_domain" | "failure"

    def rewards(self) -> np.ndarray:
        return np.array([s.reward for s in self.steps], dtype=np.float64)

    def observations(self) -> np.ndarray:
        return np.stack([s.observation for s in self.steps])

    def total_return(self) -> float:
        return float(self.rewards().sum())


def clipped_surrogate(ratios: np.ndarray, advantages: np.ndarray,
                      epsilon: float) -> np.ndarray:
    """Per-sample min(r*A, clip(r, 1-eps, 1+eps)*A)."""
    ratios = np.asarray(ratios, dtype=np.float64)
    advantages = np.asarray(advantages, dtype=np.float64)
    clipped = np.clip(ratios, 1.0 - epsilon, 1.0 + epsilon)
    return np.minimum(ratios * advantages, clipped * advantages)


def gae_advantages(
    trajectory: Trajectory,
    gamma: float,
    lam: float,
    critic: Mlp,
) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimates and value targets for one episode.

    The terminal bootstrap value is 0; targets are advantage + V(s).
    """
    rewards = trajectory.rewards()
    n = len(rewards)
    if n == 0:
        return np.zeros(0), np.zeros(0)
    values = critic.forward(trajectory.observations())[0][:, 0]
    advantages = np.zeros(n, dtype=np.float64)
    gae = 0.0
    for t in reversed(range(n)):
        next_value = values[t + 1] if t + 1 < n else 0.0
        delta = rewards[t] + gamma * next_value - values[t]
        gae = delta + gamma * lam * gae
        advantages[t] = gae
    return advantages, advantages + values


@dataclass
class PPOBatch:
    """Flattened step data from one epoch's trajectories."""

    observations: np.ndarray
    actions: np.ndarray
    old_log_probs: np.ndarray
    advantages: np.ndarray
    value_targets: np.ndarray

    @staticmethod
    def from_trajectories(trajectories: list[Trajectory], gamma: float,
                          lam: float, critic: Mlp) -> "PPOBatch":
        obs, acts, old_lp, advs, targets = [], [], [], [], []
        for trajectory in trajectories:
            if not trajectory.steps:
                continue
            adv, tgt = gae_advantages(trajectory, gamma, lam, critic)
            obs.append(trajectory.observations())
            acts.extend(s.action for s in trajectory.steps)
            old_lp.extend(s.log_prob for s in trajectory.steps)
            advs.append(adv)
            targets.append(tgt)
        if not obs:
            raise ValueError("no steps in batch")
        return PPOBatch(
            observations=np.concatenate(obs),
            actions=np.array(acts, dtype=np.int64),
            old_log_probs=np.array(old_lp, dtype=np.float64),
            advantages=np.concatenate(advs),
            value_targets=np.concatenate(targets),
        )


def ppo_loss(
    policy: Mlp,
    batch: PPOBatch,
    old_log_probs: np.ndarray,
    epsilon: float,
) -> tuple[float, dict]:
    """Surrogate objective (to maximize) over the batch, plus diagnostics."""
    logits, _ = policy.forward(batch.observations)
    log_probs = log_softmax(logits)
    selected = log_probs[np.arange(len(batch.actions)), batch.actions]
    ratios = np.exp(selected - old_log_probs)
    contributions = clipped_surrogate(ratios, batch.advantages, epsilon)
    objective = float(contributions.mean())
    clipped_mask = ratios * batch.advantages > contributions
    diagnostics = {
        "objective": objective,
        "kl_estimate": float(np.mean(old_log_probs - selected)),
        "clip_fraction": float(clipped_mask.mean()),
    }
    return objective, diagnostics


def _policy_gradients(
    policy: Mlp,
    observations: np.ndarray,
    actions: np.ndarray,
    old_log_probs: np.ndarray,
    advantages: np.ndarray,
    epsilon: float,
    entropy_coef: float,
) -> tuple[list[np.ndarray], dict]:
    """Gradient of -(surrogate + entropy bonus) w.r.t. policy parameters."""
    logits, cache = policy.forward(observations)
    log_probs = log_softmax(logits)
    probs = np.exp(log_probs)
    n = len(actions)
    selected = log_probs[np.arange(n), actions]
    ratios = np.exp(selected - old_log_probs)

    unclipped = ratios * advantages
    contributions = clipped_surrogate(ratios, advantages, epsilon)
    # d(objective)/d(log pi(a|s)) is r*A where the unclipped branch is
    # active; where the clipped branch wins, clip saturates and the
    # gradient vanishes.
    active = unclipped <= contributions + 0.0
    dobj_dselected = np.where(active, unclipped, 0.0) / n

    one_hot = np.zeros_like(probs)
    one_hot[np.arange(n), actions] = 1.0
    dlogits = dobj_dselected[:, None] * (one_hot - probs)

    if entropy_coef:
        entropy = -np.sum(probs * log_probs, axis=1, keepdims=True)
        dentropy = -probs * (log_probs + entropy)
        dlogits = dlogits + entropy_coef * dentropy / n

    grads = policy.backward(cache, -dlogits)  # minimize the negation
    diagnostics = {
        "objective": float(contributions.mean()),
        "kl_estimate": float(np.mean(old_log_probs - selected)),
        "clip_fraction": float(np.mean(unclipped > contributions)),
    }
    return grads, diagnostics


def _critic_gradients(critic: Mlp, observations: np.ndarray,
                      targets: np.ndarray) -> tuple[list[np.ndarray], float]:
    values, cache = critic.forward(observations)
    residual = values[:, 0] - targets
    loss = float(np.mean(residual ** 2))
    dvalues = (2.0 * residual / len(targets))[:, None]
    return critic.backward(cache, dvalues), loss


def ppo_update(
    policy: Mlp,
    critic: Mlp,
    batch: PPOBatch,
    config: PPOConfig,
    policy_adam: AdamState,
    critic_adam: AdamState,
    rng: np.random.Generator,
) -> dict:
    """Minibatched ascent on the clipped surrogate plus critic regression.

    Aborts remaining minibatch epochs when the KL estimate exceeds the
    configured bound. Deterministic given the generator state.
    """
    advantages = batch.advantages
    if config.normalize_advantages and len(advantages) > 1 and advantages.std() > 0:
        advantages = (advantages - advantages.mean()) / (advantages.std() + 1e-8)

    n = len(batch.actions)
    diagnostics: dict = {}
    aborted = False
    for _ in range(config.minibatch_epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.minibatch_size):
            idx = order[start:start + config.minibatch_size]
            grads, _ = _policy_gradients(
                policy, batch.observations[idx], batch.actions[idx],
                batch.old_log_probs[idx], advantages[idx],
                config.clip_epsilon, config.entropy_coef,
            )
            adam_step(policy, grads, policy_adam)
            critic_grads, _ = _critic_gradients(
                critic, batch.observations[idx], batch.value_targets[idx]
            )
            adam_step(critic, critic_grads, critic_adam)
        _, diagnostics = ppo_loss(policy, batch, batch.old_log_probs, config.clip_epsilon)
        if abs(diagnostics["kl_estimate"]) > config.kl_abort:
            aborted = True
            break
    diagnostics["kl_aborted"] = aborted
    return diagnostics


def select_action(
    policy: Mlp,
    observation: np.ndarray,
    mode: str = "sample",
    rng: np.random.Generator | None = None,
) -> tuple[int, float]:
    """Pick an action index; returns (index, log probability).

    Greedy mode takes the argmax with first-index (canonical-order)
    tie-breaking; sample mode draws from the softmax with the caller's
    seeded generator.
    """
    logits, _ = policy.forward(observation[None, :])
    log_probs = log_softmax(logits)[0]
    if mode == "greedy":
        index = int(np.argmax(log_probs))
    elif mode == "sample":
        if rng is None:
            raise ValueError("sample mode needs a seeded generator")
        probs = softmax(logits)[0]
        index = int(rng.choice(len(probs), p=probs / probs.sum()))
    else:
        raise ValueError(f"unknown selection mode '{mode}'")
    return index, float(log_probs[index])
