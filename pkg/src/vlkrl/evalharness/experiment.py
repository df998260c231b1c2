"""Experiment runner: trains a policy per seed, evaluates it, and builds
a RunReport.

Modes mirror the ablation grid: ``full`` (cross-examined, grounded
knowledge), ``no_crossexam`` (unverified claims straight to the mapper),
``no_t2s`` (verified claim texts as dense features, no slot writes),
``llm_only`` (prompted action selection, no training), and ``rl_only``
(no language-model stages). Everything is seeded; offline runs repeat
bit-identically.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, replace

import numpy as np

from vlkrl.core.actions import enumerate_actions
from vlkrl.crossexam.gating import GatingConfig, gate_dynamic_update
from vlkrl.env.goals import generate_goal
from vlkrl.env.world import World, resolve_world
from vlkrl.evalharness.metrics import attribute_failure
from vlkrl.evalharness.report import EpisodeRecord, RunReport
from vlkrl.gateway.gateway import LlmGateway
from vlkrl.mapper.embedding import TrigramEmbeddingProvider
from vlkrl.mapper.mapping import MapperConfig
from vlkrl.orchestration.drivers import LlmPolicyDriver, RlPolicyDriver
from vlkrl.orchestration.episode import EpisodeResult, run_episode
from vlkrl.orchestration.oracles import (
    DualRoleProvider,
    NoisyOracleRespondentProvider,
    OracleJudgeProvider,
    OraclePolicyProvider,
    OracleRespondentProvider,
)
from vlkrl.orchestration.pipeline import PipelineConfig, TurnPipeline
from vlkrl.policy.encoder import StateEncoder
from vlkrl.policy.dqn import ReplayBuffer, Transition, dqn_update, sync_target
from vlkrl.policy.nets import AdamState, Mlp
from vlkrl.policy.pg import pg_update
from vlkrl.policy.ppo import PPOBatch, PPOConfig, ppo_update
from vlkrl.policy.rewards import EVENT_FAILURE, reward

log = logging.getLogger(__name__)

MODES = ("full", "no_crossexam", "no_t2s", "llm_only", "rl_only")
BACKBONES = ("ppo", "dqn", "pg")

TRAIN_GOAL_STRIDE = 1_000_000
EVAL_GOAL_OFFSET = 500_000


class GatewayUnavailableError(RuntimeError):
    """A mode that needs a live gateway has none configured."""


@dataclass(frozen=True)
class ExperimentConfig:
    world: str = "default"
    mode: str = "full"
    backbone: str = "ppo"
    gating: str = "cross_exam"  # cross_exam | fixed | dynamic | none
    respondent: str = "oracle"  # oracle | noisy | live
    noise_rate: float = 0.6
    retry_budget: int = 0
    tau: float = 0.7
    epochs: int = 300
    batch_size: int = 100
    episodes: int = 250
    max_len: int = 30
    round_limit: int = 5
    patience: int = 5
    seeds: tuple[int, ...] = (11, 12, 13, 14, 15)
    learning_rate: float = 3e-4
    entropy_coef: float = 0.01
    hidden_sizes: tuple[int, ...] = (128, 128)
    # "bc" = built-in behavior-clone warm start (the standard regime),
    # "" = from scratch (the low-resource regime), else a checkpoint path.
    warm_start: str = "bc"
    bc_episodes: int = 150
    bc_epochs: int = 15
    validation_episodes: int = 4
    text_feature_dim: int = 32

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode '{self.mode}'")
        if self.backbone not in BACKBONES:
            raise ValueError(f"unknown backbone '{self.backbone}'")

    def to_dict(self) -> dict:
        payload = asdict(self)
        payload["seeds"] = list(self.seeds)
        payload["hidden_sizes"] = list(self.hidden_sizes)
        return payload


def low_resource_config(base: ExperimentConfig | None = None) -> ExperimentConfig:
    """The from-scratch regime: one dialogue per epoch, no warm start."""
    base = base or ExperimentConfig()
    return replace(base, batch_size=1, warm_start="")


def _pipeline_config(config: ExperimentConfig) -> PipelineConfig:
    knowledge = {
        "full": "full",
        "no_crossexam": "full",
        "no_t2s": "no_t2s",
        "llm_only": "full",
        "rl_only": "rl_only",
    }[config.mode]
    gating_mode = "none" if config.mode == "no_crossexam" else config.gating
    return PipelineConfig(
        knowledge=knowledge,
        gating=GatingConfig(mode=gating_mode),
        mapper=MapperConfig(tau=config.tau, retry_budget=config.retry_budget),
        round_limit=config.round_limit,
        text_feature_dim=config.text_feature_dim,
    )


def _make_pipeline(
    world: World, config: ExperimentConfig, seed: int,
) -> tuple[TurnPipeline, LlmGateway | None, OraclePolicyProvider | None]:
    pipeline_config = _pipeline_config(config)
    if pipeline_config.knowledge == "rl_only":
        return TurnPipeline(world.ontology, pipeline_config), None, None

    policy_provider = None
    if config.respondent == "oracle":
        respondent = OracleRespondentProvider(world)
    elif config.respondent == "noisy":
        respondent = NoisyOracleRespondentProvider(
            world, seed=seed * 77 + 5, noise_rate=config.noise_rate
        )
    elif config.respondent == "live":
        from vlkrl.gateway.providers import HttpChatProvider

        try:
            live = HttpChatProvider()
        except ValueError as exc:
            raise GatewayUnavailableError(str(exc)) from exc
        gateway = LlmGateway(provider=live)
        pipeline = TurnPipeline(
            world.ontology, pipeline_config, gateway=gateway,
            embedder=TrigramEmbeddingProvider(),
        )
        return pipeline, gateway, None
    else:
        raise ValueError(f"unknown respondent '{config.respondent}'")

    if config.mode == "llm_only":
        policy_provider = OraclePolicyProvider(world)
    provider = DualRoleProvider(respondent, OracleJudgeProvider(world), policy_provider)
    gateway = LlmGateway(provider=provider)
    pipeline = TurnPipeline(
        world.ontology, pipeline_config, gateway=gateway,
        embedder=TrigramEmbeddingProvider(),
    )
    return pipeline, gateway, policy_provider


def _encoder(world: World, config: ExperimentConfig) -> StateEncoder:
    text_dim = config.text_feature_dim if config.mode == "no_t2s" else 0
    return StateEncoder(world.ontology, text_feature_dim=text_dim)


def _episode_record(
    result: EpisodeResult, goal, seed: int, episode: int, goal_seed: int,
    gateway_calls: int, max_len: int,
) -> EpisodeRecord:
    attribution = ""
    if result.outcome.label == "failure":
        attribution = attribute_failure(goal, result.outcome.constraint_satisfaction)
    if result.trajectory.steps:
        episode_return = result.trajectory.total_return()
    else:
        episode_return = -(max(result.turns, 1) - 1) + _terminal_reward(result, max_len)
    return EpisodeRecord(
        seed=seed,
        episode=episode,
        goal_seed=goal_seed,
        outcome=result.outcome.label,
        success=result.outcome.success,
        complete=result.outcome.complete,
        terminated_early=result.outcome.terminated_early,
        turns=result.turns,
        episode_return=episode_return,
        act_matches=result.act_matches,
        act_predicted=result.act_predicted,
        act_reference=result.act_reference,
        attribution=attribution,
        constraint_satisfaction=dict(result.outcome.constraint_satisfaction),
        retry_attempts=result.retry_attempts,
        gateway_calls=gateway_calls,
    )


def _terminal_reward(result: EpisodeResult, max_len: int) -> float:
    from vlkrl.env.outcome import OUTCOME_ALL
    from vlkrl.policy.rewards import EVENT_ALL_DOMAINS, EVENT_SINGLE_DOMAIN

    label = result.outcome.label
    if label == OUTCOME_ALL:
        return reward(EVENT_ALL_DOMAINS, max_len)
    if label == "failure":
        return reward(EVENT_FAILURE, max_len)
    return reward(EVENT_SINGLE_DOMAIN, max_len) * len(result.outcome.satisfied_domains)


def _validation_f1(world, config, pipeline, driver, seed, epoch) -> float:
    matched = predicted = reference = 0
    for i in range(config.validation_episodes):
        goal_seed = seed * TRAIN_GOAL_STRIDE + 900_000 + epoch * 100 + i
        goal = generate_goal(world, goal_seed)
        result = run_episode(world, goal, pipeline, driver,
                             max_len=config.max_len, patience=config.patience)
        matched += result.act_matches
        predicted += result.act_predicted
        reference += result.act_reference
    precision = matched / predicted if predicted else 0.0
    recall = matched / reference if reference else 0.0
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _behavior_clone(
    world: World,
    config: ExperimentConfig,
    seed: int,
    pipeline: TurnPipeline,
    policy: Mlp,
    encoder: StateEncoder,
    rng: np.random.Generator,
) -> None:
    """Warm-start the policy by imitating the reference-act oracle."""
    from vlkrl.orchestration.oracles import reference_act
    from vlkrl.policy.nets import adam_step, log_softmax, softmax

    actions = enumerate_actions(world.ontology)
    index_of = {a: i for i, a in enumerate(actions)}
    observations: list[np.ndarray] = []
    labels: list[int] = []

    class CloneDriver:
        def act(self, session, knowledge, db_count):
            observation = encoder.encode(
                knowledge.enriched, db_count, session.state.turn,
                booked_domains=tuple(sorted(session.agenda.bookings)),
                claim_texts=knowledge.claim_texts,
            )
            ref = reference_act(world, session.goal, session.agenda,
                                knowledge.enriched.merged_belief())
            observations.append(observation)
            labels.append(index_of[ref])
            return ref, None

    driver = CloneDriver()
    for i in range(config.bc_episodes):
        goal = generate_goal(world, seed * TRAIN_GOAL_STRIDE + 700_000 + i)
        run_episode(world, goal, pipeline, driver,
                    max_len=config.max_len, patience=config.patience)
    X = np.stack(observations)
    y = np.array(labels, dtype=np.int64)
    adam = AdamState(lr=1e-3)
    n = len(y)
    for _ in range(config.bc_epochs):
        order = rng.permutation(n)
        for start in range(0, n, 128):
            idx = order[start:start + 128]
            logits, cache = policy.forward(X[idx])
            probs = softmax(logits)
            one_hot = np.zeros_like(probs)
            one_hot[np.arange(len(idx)), y[idx]] = 1.0
            grads = policy.backward(cache, (probs - one_hot) / len(idx))
            adam_step(policy, grads, adam)
    logits, _ = policy.forward(X)
    accuracy = float(np.mean(np.argmax(logits, axis=1) == y))
    log.info("behavior-clone warm start: %d steps, accuracy %.3f", n, accuracy)


def train_policy(
    world: World,
    config: ExperimentConfig,
    seed: int,
    pipeline: TurnPipeline,
) -> tuple[Mlp, Mlp, list[dict]]:
    """Train one policy; returns (policy, critic, per-epoch curve rows)."""
    encoder = _encoder(world, config)
    actions = enumerate_actions(world.ontology)
    seq = np.random.SeedSequence(seed)
    init_rng, sample_rng, update_rng, bc_rng = (
        np.random.default_rng(s) for s in seq.spawn(4)
    )
    sizes = (encoder.dim, *config.hidden_sizes, len(actions))
    policy = Mlp(sizes, init_rng)
    critic = Mlp((encoder.dim, *config.hidden_sizes, 1), init_rng)
    if config.warm_start == "bc":
        _behavior_clone(world, config, seed, pipeline, policy, encoder, bc_rng)
    elif config.warm_start:
        from vlkrl.policy.checkpoint import load_checkpoint

        _, arrays = load_checkpoint(config.warm_start)
        policy.set_flat(arrays[0])
        critic.set_flat(arrays[1])

    ppo_config = PPOConfig(
        learning_rate=config.learning_rate,
        epochs=config.epochs,
        batch_size=config.batch_size,
        max_dialogue_length=config.max_len,
        entropy_coef=config.entropy_coef,
        hidden_sizes=config.hidden_sizes,
    )
    policy_adam = AdamState(lr=config.learning_rate)
    critic_adam = AdamState(lr=config.learning_rate)
    qnet_target = None
    replay = None
    epsilon = 1.0
    if config.backbone == "dqn":
        qnet_target = Mlp(sizes, np.random.default_rng(0))
        sync_target(policy, qnet_target)
        replay = ReplayBuffer(20_000, update_rng)

    curves: list[dict] = []
    goal_counter = 0
    for epoch in range(config.epochs):
        driver = RlPolicyDriver(policy, encoder, world.ontology,
                                mode="sample", rng=sample_rng)
        trajectories = []
        successes = 0
        returns = []
        for _ in range(config.batch_size):
            goal_seed = seed * TRAIN_GOAL_STRIDE + goal_counter
            goal_counter += 1
            goal = generate_goal(world, goal_seed)
            if config.backbone == "dqn":
                result = _run_dqn_episode(
                    world, goal, pipeline, policy, encoder, epsilon,
                    sample_rng, config, replay,
                )
            else:
                result = run_episode(world, goal, pipeline, driver,
                                     max_len=config.max_len,
                                     patience=config.patience)
            trajectories.append(result.trajectory)
            successes += result.outcome.success
            returns.append(result.trajectory.total_return())

        row = {
            "epoch": epoch,
            "success_rate": successes / config.batch_size,
            "mean_return": float(np.mean(returns)) if returns else 0.0,
        }
        if config.backbone == "ppo":
            batch = PPOBatch.from_trajectories(
                trajectories, ppo_config.gamma, ppo_config.gae_lambda, critic
            )
            diagnostics = ppo_update(policy, critic, batch, ppo_config,
                                     policy_adam, critic_adam, update_rng)
            row.update(diagnostics)
        elif config.backbone == "pg":
            diagnostics = pg_update(policy, trajectories, policy_adam,
                                    gamma=ppo_config.gamma)
            row.update(diagnostics)
        else:  # dqn
            losses = []
            if len(replay) >= 64:
                for _ in range(16):
                    batch = replay.sample(64)
                    losses.append(dqn_update(policy, qnet_target, batch,
                                             ppo_config.gamma, policy_adam))
            if epoch % 5 == 4:
                sync_target(policy, qnet_target)
            epsilon = max(0.05, epsilon * 0.97)
            row["epsilon"] = epsilon
            row["td_loss"] = float(np.mean(losses)) if losses else 0.0

        gating = pipeline.config.gating
        if gating.mode == "dynamic":
            eval_driver = RlPolicyDriver(policy, encoder, world.ontology, mode="greedy")
            f1 = _validation_f1(world, config, pipeline, eval_driver, seed, epoch)
            gating.current_tau = gate_dynamic_update(gating, epoch, f1)
            row["tau"] = gating.current_tau
            row["validation_f1"] = f1
        curves.append(row)
    return policy, critic, curves


def _run_dqn_episode(world, goal, pipeline, qnet, encoder, epsilon,
                     rng, config, replay) -> EpisodeResult:
    """Epsilon-greedy rollout that also feeds the replay buffer."""
    from vlkrl.core.actions import enumerate_actions as _enum

    actions = _enum(world.ontology)

    class EpsGreedyDriver:
        def act(self, session, knowledge, db_count):
            observation = encoder.encode(
                knowledge.enriched, db_count, session.state.turn,
                booked_domains=tuple(sorted(session.agenda.bookings)),
                claim_texts=knowledge.claim_texts,
            )
            if rng.random() < epsilon:
                index = int(rng.integers(len(actions)))
            else:
                values, _ = qnet.forward(observation[None, :])
                index = int(np.argmax(values[0]))
            return actions[index], (observation, index, 0.0)

    result = run_episode(world, goal, pipeline, EpsGreedyDriver(),
                         max_len=config.max_len, patience=config.patience)
    steps = result.trajectory.steps
    for i, step in enumerate(steps):
        next_observation = (
            steps[i + 1].observation if i + 1 < len(steps) else step.observation
        )
        replay.push(Transition(step.observation, step.action, step.reward,
                               next_observation, terminal=(i + 1 == len(steps))))
    return result


def evaluate_policy(
    world: World,
    config: ExperimentConfig,
    seed: int,
    pipeline: TurnPipeline,
    driver,
    policy_provider: OraclePolicyProvider | None = None,
    gateway: LlmGateway | None = None,
) -> list[EpisodeRecord]:
    records = []
    for i in range(config.episodes):
        goal_seed = seed * TRAIN_GOAL_STRIDE + EVAL_GOAL_OFFSET + i
        goal = generate_goal(world, goal_seed)
        calls_before = gateway.call_count if gateway else 0
        hook = policy_provider.bind if policy_provider else None
        result = run_episode(world, goal, pipeline, driver,
                             max_len=config.max_len, patience=config.patience,
                             session_hook=hook)
        calls = (gateway.call_count - calls_before) if gateway else 0
        records.append(
            _episode_record(result, goal, seed, i, goal_seed, calls, config.max_len)
        )
    return records


def run_experiment(config: ExperimentConfig) -> RunReport:
    """Train (where the mode trains) and evaluate over the seed set."""
    world = resolve_world(config.world)
    all_records: list[EpisodeRecord] = []
    curves: dict[str, list[dict]] = {}
    for seed in config.seeds:
        pipeline, gateway, policy_provider = _make_pipeline(world, config, seed)
        if config.mode == "llm_only":
            driver = LlmPolicyDriver(gateway, world.ontology)
        else:
            policy, _, seed_curves = train_policy(world, config, seed, pipeline)
            curves[f"seed_{seed}"] = seed_curves
            encoder = _encoder(world, config)
            driver = RlPolicyDriver(policy, encoder, world.ontology, mode="greedy")
        all_records.extend(
            evaluate_policy(world, config, seed, pipeline, driver,
                            policy_provider, gateway)
        )
    return RunReport.build(config.to_dict(), all_records, curves)
