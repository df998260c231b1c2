"""Episode runner: the user simulator, knowledge pipeline, and policy in
one loop, producing a trajectory, an outcome, and per-turn traces.

Reward assignment: every system turn costs 1; when the episode ends, the
last step's turn penalty is replaced by the outcome reward (2L for all
domains, +5 per satisfied domain otherwise, -L for failure).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Protocol

from vlkrl.core.actions import DialogueAct
from vlkrl.core.claims import EnrichedState
from vlkrl.core.goals import UserGoal
from vlkrl.core.ontology import EMPTY
from vlkrl.core.state import DialogueState, empty_state
from vlkrl.env.database import db_query
from vlkrl.env.outcome import OUTCOME_ALL, OUTCOME_FAILURE, Outcome, judge_outcome
from vlkrl.env.simulator import UserAgenda
from vlkrl.env.world import World
from vlkrl.orchestration.oracles import reference_act
from vlkrl.orchestration.pipeline import PipelineCarry, TurnKnowledge, TurnPipeline
from vlkrl.policy.rewards import (
    EVENT_ALL_DOMAINS,
    EVENT_FAILURE,
    EVENT_SINGLE_DOMAIN,
    EVENT_TURN,
    reward,
)
from vlkrl.policy.ppo import Trajectory, TrajectoryStep

SYSTEM_TEMPLATES = {
    "request": "What {slot} would you like for the {domain}?",
    "inform": "The {domain} {slot} is {value}.",
    "confirm": "Just to confirm, the {domain} {slot} is {value}?",
    "goodbye": "Thank you, goodbye!",
    "book_ok": "I have booked {entity} for your {domain}.",
    "book_no_match": "I could not find any {domain} matching your requirements.",
    "book_already": "The {domain} booking is already in place.",
    "book_not_needed": "I can book a {domain} for you as well.",
}


class PolicyDriver(Protocol):
    """Chooses the system act each turn.

    Returns the act plus (observation, action index, log prob) when the
    driver is trainable, else None.
    """

    def act(self, session: "EnvSession", knowledge: TurnKnowledge,
            db_count: int) -> tuple[DialogueAct, tuple | None]: ...


@dataclass
class EnvSession:
    """Mutable per-episode environment handle."""

    world: World
    goal: UserGoal
    agenda: UserAgenda
    state: DialogueState
    carry: PipelineCarry = field(default_factory=PipelineCarry)
    knowledge: TurnKnowledge | None = None
    focus_domain: str = ""

    def merged_belief(self) -> dict[str, dict[str, str]]:
        if self.knowledge is not None:
            return self.knowledge.enriched.merged_belief()
        return EnrichedState(self.state, self.carry.pairs).merged_belief()


@dataclass
class TurnTrace:
    turn: int
    user_utterance: str
    user_acts: list[str]
    claims: list[dict]
    transcripts: list[dict]
    verified_ids: list[str]
    mapper_diagnostics: list[dict]
    pairs: list[dict]
    state_diff: dict
    db_count: int
    action: str
    system_utterance: str
    system_result: dict
    merged_belief: dict = field(default_factory=dict)


@dataclass
class EpisodeResult:
    trajectory: Trajectory
    outcome: Outcome
    turns: int
    act_matches: int
    act_predicted: int
    act_reference: int
    retry_attempts: int
    traces: list[TurnTrace] = field(default_factory=list)
    system_informs: list[tuple[str, str, str]] = field(default_factory=list)
    bookings: dict[str, dict[str, str]] = field(default_factory=dict)

    @property
    def total_return(self) -> float:
        return self.trajectory.total_return()


def execute_system_action(session: EnvSession, action: DialogueAct) -> dict:
    """Apply a system act to the environment; bookings hit the database."""
    if action.act_type != "book":
        return {"status": action.act_type}
    domain = action.domain
    goal = session.goal
    if domain not in goal.active_domains:
        return {"status": "not_needed"}
    if domain in session.agenda.bookings:
        return {"status": "already"}
    merged = session.merged_belief()
    entities = db_query(session.world.database, domain, merged.get(domain, {}))
    if not entities:
        return {"status": "no_match"}
    entity = entities[0]
    ok = all(
        _spec_holds(spec, entity, session.world)
        for spec in goal.constraints_for(domain)
    )
    if ok:
        session.agenda.note_booking(domain, entity)
        return {"status": "ok", "entity": dict(entity)}
    return {"status": "violates", "entity": dict(entity)}


def _spec_holds(spec, entity: dict[str, str], world: World) -> bool:
    if spec.kind == "explicit":
        return entity.get(spec.slot) == spec.value
    rule = world.rule_by_id(spec.rule_id)
    return rule.satisfied(entity.get(spec.slot, ""), spec.source_value)


def render_system_utterance(action: DialogueAct, result: dict) -> str:
    if action.act_type == "book":
        status = result.get("status", "no_match")
        template = SYSTEM_TEMPLATES.get(f"book_{status}", SYSTEM_TEMPLATES["book_ok"])
        entity = result.get("entity", {}).get("id", "a match")
        return template.format(domain=action.domain, entity=entity)
    template = SYSTEM_TEMPLATES[action.act_type]
    return template.format(
        domain=action.domain, slot=action.slot.replace("_", " "), value=action.value
    )


def apply_user_turn(session: EnvSession, utterance: str,
                     acts: tuple[DialogueAct, ...]) -> None:
    state = session.state
    belief = {d: dict(s) for d, s in state.belief_state.items()}
    for act in acts:
        if act.act_type == "inform" and act.domain in belief:
            belief[act.domain][act.slot] = act.value
            session.focus_domain = act.domain
        elif act.act_type == "request":
            session.focus_domain = act.domain
    request_state: dict[str, tuple[str, ...]] = {}
    for domain, slot in session.agenda.pending_requests():
        request_state.setdefault(domain, ())
        request_state[domain] = request_state[domain] + (slot,)
    session.state = state.advanced(
        belief_state=belief,
        user_action=tuple(acts),
        request_state=request_state,
        history=state.history + (("user", utterance),),
    )


def _outcome_reward(outcome: Outcome, max_len: int) -> float:
    if outcome.label == OUTCOME_ALL:
        return reward(EVENT_ALL_DOMAINS, max_len)
    if outcome.label == OUTCOME_FAILURE:
        return reward(EVENT_FAILURE, max_len)
    return reward(EVENT_SINGLE_DOMAIN, max_len) * len(outcome.satisfied_domains)


def run_episode(
    world: World,
    goal: UserGoal,
    pipeline: TurnPipeline,
    driver: PolicyDriver,
    max_len: int = 30,
    patience: int = 5,
    collect_traces: bool = False,
    session_hook: Callable[[EnvSession], None] | None = None,
) -> EpisodeResult:
    session = EnvSession(
        world=world,
        goal=goal,
        agenda=UserAgenda(world, goal, patience=patience),
        state=empty_state(world.ontology),
    )
    if session_hook is not None:
        session_hook(session)

    trajectory = Trajectory()
    traces: list[TurnTrace] = []
    system_informs: list[tuple[str, str, str]] = []
    act_matches = act_predicted = act_reference = 0
    retry_attempts = 0
    last_action: DialogueAct | None = None
    last_result: dict | None = None

    for _ in range(max_len):
        user = session.agenda.user_turn(last_action, last_result)
        if user.done:
            break
        apply_user_turn(session, user.utterance, user.acts)

        knowledge, session.carry = pipeline.run_turn(session.state, session.carry)
        session.knowledge = knowledge
        retry_attempts += knowledge.retry_attempts

        merged = knowledge.enriched.merged_belief()
        focus = session.focus_domain or goal.active_domains[0]
        db_count = len(db_query(world.database, focus, merged.get(focus, {})))

        action, step_info = driver.act(session, knowledge, db_count)
        reference = reference_act(world, goal, session.agenda, merged)
        act_predicted += 1
        act_reference += 1
        if action == reference:
            act_matches += 1

        result = execute_system_action(session, action)
        utterance = render_system_utterance(action, result)
        if action.act_type == "inform":
            system_informs.append((action.domain, action.slot, action.value))

        if step_info is not None:
            observation, index, log_prob = step_info
            trajectory.steps.append(
                TrajectoryStep(observation, index, log_prob,
                               reward(EVENT_TURN, max_len), done=False)
            )
        if collect_traces:
            traces.append(
                TurnTrace(
                    turn=session.state.turn + 1,
                    user_utterance=user.utterance,
                    user_acts=[a.name() for a in user.acts],
                    claims=[claim_dict(c) for c in knowledge.claims],
                    transcripts=[transcript_dict(t) for t in knowledge.transcripts],
                    verified_ids=[c.id for c in knowledge.verified],
                    mapper_diagnostics=[vars(d) for d in knowledge.diagnostics],
                    pairs=[pair_dict(p) for p in knowledge.new_pairs],
                    state_diff=state_diff(user.acts, knowledge),
                    db_count=db_count,
                    action=action.name(),
                    system_utterance=utterance,
                    system_result=result,
                    merged_belief={d: dict(s) for d, s in merged.items()},
                )
            )

        session.state = session.state.advanced(
            system_action=(action,),
            history=session.state.history + (("system", utterance),),
            turn=session.state.turn + 1,
        )
        last_action, last_result = action, result
        if action.act_type == "goodbye":
            break

    outcome = judge_outcome(
        goal, world, session.agenda.bookings, session.agenda.answered,
        session.agenda.terminated_early,
    )
    trajectory.outcome = outcome.label
    if trajectory.steps:
        last = trajectory.steps[-1]
        trajectory.steps[-1] = TrajectoryStep(
            last.observation, last.action, last.log_prob,
            _outcome_reward(outcome, max_len), done=True,
        )
    return EpisodeResult(
        trajectory=trajectory,
        outcome=outcome,
        turns=session.state.turn,
        act_matches=act_matches,
        act_predicted=act_predicted,
        act_reference=act_reference,
        retry_attempts=retry_attempts,
        traces=traces,
        system_informs=system_informs,
        bookings=dict(session.agenda.bookings),
    )


def claim_dict(claim) -> dict:
    return {
        "id": claim.id,
        "text": claim.text,
        "kind": claim.kind,
        "hinted_pairs": [list(p) for p in claim.hinted_pairs],
        "confidence": claim.confidence,
    }


def transcript_dict(transcript) -> dict:
    return {
        "claim_id": transcript.claim_id,
        "rounds": [list(r) for r in transcript.rounds],
        "verdict": transcript.verdict,
        "rounds_used": transcript.rounds_used,
    }


def pair_dict(pair) -> dict:
    return {
        "domain": pair.domain,
        "slot": pair.slot,
        "value": pair.value,
        "similarity": pair.similarity,
        "source_claim": pair.source_claim,
    }


def state_diff(user_acts, knowledge: TurnKnowledge) -> dict:
    return {
        "base_filled": [
            [a.domain, a.slot, a.value]
            for a in user_acts
            if a.act_type == "inform" and a.value != EMPTY
        ],
        "augmented": [
            [p.domain, p.slot, p.value] for p in knowledge.new_pairs
        ],
    }
