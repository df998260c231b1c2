"""MDP reward, state encoding, and the PPO/DQN/PG policy optimizers.

Sign convention: the clipped surrogate is an objective to MAXIMIZE.
``ppo_loss`` returns that objective (mean over the batch); the updaters
perform gradient ascent on it by feeding its negation to a minimizing
Adam step. Critic regression and the entropy bonus are separate,
separately-weighted terms.
"""

from vlkrl.policy.rewards import (
    EVENT_ALL_DOMAINS,
    EVENT_FAILURE,
    EVENT_SINGLE_DOMAIN,
    EVENT_TURN,
    reward,
)
from vlkrl.policy.encoder import StateEncoder, encode_state
from vlkrl.policy.nets import AdamState, Mlp, adam_step
from vlkrl.policy.ppo import (
    PPOConfig,
    Trajectory,
    TrajectoryStep,
    clipped_surrogate,
    gae_advantages,
    ppo_loss,
    ppo_update,
    select_action,
)
from vlkrl.policy.dqn import ReplayBuffer, dqn_update, sync_target
from vlkrl.policy.pg import pg_update
from vlkrl.policy.llm_policy import llm_only_policy
from vlkrl.policy.checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "AdamState",
    "EVENT_ALL_DOMAINS",
    "EVENT_FAILURE",
    "EVENT_SINGLE_DOMAIN",
    "EVENT_TURN",
    "Mlp",
    "PPOConfig",
    "ReplayBuffer",
    "StateEncoder",
    "Trajectory",
    "TrajectoryStep",
    "adam_step",
    "clipped_surrogate",
    "dqn_update",
    "encode_state",
    "gae_advantages",
    "llm_only_policy",
    "load_checkpoint",
    "pg_update",
    "ppo_loss",
    "ppo_update",
    "reward",
    "save_checkpoint",
    "select_action",
    "sync_target",
]
