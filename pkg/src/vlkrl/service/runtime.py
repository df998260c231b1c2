"""Per-session runtime: one dialogue, human- or simulator-driven.

Each session owns its state, pipeline carry, and policy; nothing is
shared between sessions except the store. Turn processing is strictly
sequential per session (a non-blocking lock; overlapping requests get a
busy error the API maps to 409).
"""

from __future__ import annotations

import copy
import threading
from dataclasses import asdict
from types import SimpleNamespace

import numpy as np

from vlkrl.core.actions import enumerate_actions
from vlkrl.core.state import empty_state
from vlkrl.env.database import db_query
from vlkrl.env.goals import generate_goal
from vlkrl.env.simulator import UserAgenda
from vlkrl.env.world import World
from vlkrl.orchestration.drivers import LlmPolicyDriver, RlPolicyDriver
from vlkrl.orchestration.episode import (
    EnvSession,
    apply_user_turn,
    claim_dict,
    execute_system_action,
    pair_dict,
    render_system_utterance,
    transcript_dict,
)
from vlkrl.orchestration.pipeline import PipelineCarry, TurnPipeline
from vlkrl.policy.encoder import StateEncoder
from vlkrl.policy.nets import Mlp

OPENING = "Hello! I can help with trains, hotels, and attractions. What do you need?"
GOODBYE_MARKERS = ("goodbye", "bye", "that is all", "that's all")

STATUS_ACTIVE = "active"
STATUS_COMPLETED = "completed"
STATUS_TERMINATED = "terminated-early"


class SessionBusyError(RuntimeError):
    """A turn is already in flight for this session."""


class SessionStateError(RuntimeError):
    """The operation is not legal in the session's current status."""


class RatingError(ValueError):
    """The submitted rating violates its constraints."""


class SessionRuntime:
    def __init__(
        self,
        session_id: str,
        world: World,
        mode: str,
        pipeline: TurnPipeline,
        user_kind: str = "human",
        seed: int = 0,
        policy: Mlp | None = None,
        agent_label: str | None = None,
    ):
        self.id = session_id
        self.world = world
        self.mode = mode
        self.pipeline = pipeline
        self.user_kind = user_kind
        self.status = STATUS_ACTIVE
        self.rating: dict | None = None
        self.records: list[dict] = []
        self.agent_label = agent_label or mode
        self._lock = threading.Lock()

        ontology = world.ontology
        text_dim = pipeline.config.text_feature_dim if mode == "no_t2s" else 0
        self.encoder = StateEncoder(ontology, text_feature_dim=text_dim)
        if mode == "llm_only":
            self.driver = LlmPolicyDriver(pipeline.gateway, ontology)
        else:
            actions = enumerate_actions(ontology)
            net = policy or Mlp(
                (self.encoder.dim, 128, 128, len(actions)), np.random.default_rng(seed)
            )
            self.driver = RlPolicyDriver(
                net, self.encoder, ontology, mode="greedy"
            )

        if user_kind == "sim":
            goal = generate_goal(world, seed)
            self.env = EnvSession(
                world=world, goal=goal,
                agenda=UserAgenda(world, goal),
                state=empty_state(ontology),
            )
            self._last_action = None
            self._last_result = None
        else:
            self.state = empty_state(ontology)
            self.carry = PipelineCarry()
            self.bookings: dict[str, dict] = {}
            self.focus = sorted(ontology.domains)[0]

    # -- turn processing -----------------------------------------------------

    def utterance(self, text: str) -> dict:
        if not self._lock.acquire(blocking=False):
            raise SessionBusyError(self.id)
        try:
            if self.status != STATUS_ACTIVE:
                raise SessionStateError(f"session is {self.status}")
            exchanges_before = self._exchange_count()
            snapshot = None
            if self.user_kind == "sim":
                # world and goal are immutable; share them across the copy
                memo = {id(self.env.world): self.env.world,
                        id(self.env.goal): self.env.goal}
                snapshot = copy.deepcopy(self.env, memo)
            try:
                if self.user_kind == "sim":
                    record = self._sim_turn()
                else:
                    record = self._human_turn(text)
            except Exception:
                # failed turns must not advance the dialogue
                if snapshot is not None:
                    self.env = snapshot
                raise
            record["exchanges"] = self._new_exchanges(exchanges_before)
            self.records.append(record)
            return record
        finally:
            self._lock.release()

    def _exchange_count(self) -> int:
        gateway = self.pipeline.gateway
        return len(gateway.exchanges) if gateway else 0

    def _new_exchanges(self, since: int) -> list[dict]:
        gateway = self.pipeline.gateway
        if gateway is None:
            return []
        return [
            {
                "role": e.role,
                "prompt": "\n".join(text for _, text in e.messages),
                "response": e.response,
                "latency_s": round(e.latency_s, 6),
                "prompt_tokens": e.prompt_tokens,
                "completion_tokens": e.completion_tokens,
            }
            for e in gateway.exchanges[since:]
        ]

    def _sim_turn(self) -> dict:
        env = self.env
        user = env.agenda.user_turn(self._last_action, self._last_result)
        if user.done:
            self.status = (
                STATUS_TERMINATED if user.terminated_early else STATUS_COMPLETED
            )
            return self._record(
                user.utterance, [a.name() for a in user.acts], None, None, None,
                reply="", db_count=0,
            )
        apply_user_turn(env, user.utterance, user.acts)
        knowledge, env.carry = self.pipeline.run_turn(env.state, env.carry)
        env.knowledge = knowledge
        merged = knowledge.enriched.merged_belief()
        focus = env.focus_domain or env.goal.active_domains[0]
        db_count = len(db_query(self.world.database, focus, merged.get(focus, {})))
        action, _ = self.driver.act(env, knowledge, db_count)
        result = execute_system_action(env, action)
        reply = render_system_utterance(action, result)
        env.state = env.state.advanced(
            system_action=(action,),
            history=env.state.history + (("system", reply),),
            turn=env.state.turn + 1,
        )
        self._last_action, self._last_result = action, result
        if action.act_type == "goodbye":
            self.status = STATUS_COMPLETED
        return self._record(
            user.utterance, [a.name() for a in user.acts], knowledge, action,
            result, reply, db_count,
        )

    def _human_turn(self, text: str) -> dict:
        lowered = text.strip().lower()
        if any(marker in lowered for marker in GOODBYE_MARKERS):
            self.status = STATUS_COMPLETED
            reply = "Thank you, goodbye!"
            self.state = self.state.advanced(
                history=self.state.history + (("user", text), ("system", reply)),
                terminated=True,
            )
            return self._record(text, [], None, None, None, reply, 0)

        state = self.state.advanced(
            user_action=(),
            history=self.state.history + (("user", text),),
        )
        knowledge, carry = self.pipeline.run_turn(state, self.carry)
        merged = knowledge.enriched.merged_belief()
        if knowledge.new_pairs:
            self.focus = knowledge.new_pairs[-1].domain
        db_count = len(
            db_query(self.world.database, self.focus, merged.get(self.focus, {}))
        )
        shim = SimpleNamespace(
            state=state,
            world=self.world,
            focus_domain=self.focus,
            goal=SimpleNamespace(active_domains=tuple(sorted(self.world.ontology.domains))),
            agenda=SimpleNamespace(bookings=self.bookings),
        )
        action, _ = self.driver.act(shim, knowledge, db_count)
        result = self._execute_human(action, merged)
        reply = render_system_utterance(action, result)
        self.state = state.advanced(
            system_action=(action,),
            history=state.history + (("system", reply),),
            turn=state.turn + 1,
        )
        self.carry = carry
        if action.act_type == "goodbye":
            self.status = STATUS_COMPLETED
        return self._record(text, [], knowledge, action, result, reply, db_count)

    def _execute_human(self, action, merged) -> dict:
        if action.act_type != "book":
            return {"status": action.act_type}
        domain = action.domain
        if domain in self.bookings:
            return {"status": "already"}
        entities = db_query(self.world.database, domain, merged.get(domain, {}))
        if not entities:
            return {"status": "no_match"}
        self.bookings[domain] = entities[0]
        return {"status": "ok", "entity": dict(entities[0])}

    def _record(self, user_text, user_acts, knowledge, action, result,
                reply, db_count) -> dict:
        turn = len([r for r in self.records if r.get("type") == "turn"]) + 1
        record = {
            "type": "turn",
            "turn": turn,
            "user_utterance": user_text,
            "user_acts": user_acts,
            "claims": [],
            "transcripts": [],
            "verified_ids": [],
            "mapper_diagnostics": [],
            "pairs": [],
            "state_diff": {"base_filled": [], "augmented": []},
            "db_count": db_count,
            "action": action.name() if action else "",
            "system_utterance": reply,
            "system_result": result or {},
            "status": self.status,
        }
        if knowledge is not None:
            record.update(
                claims=[claim_dict(c) for c in knowledge.claims],
                transcripts=[transcript_dict(t) for t in knowledge.transcripts],
                verified_ids=[c.id for c in knowledge.verified],
                mapper_diagnostics=[asdict(d) for d in knowledge.diagnostics],
                pairs=[pair_dict(p) for p in knowledge.new_pairs],
                state_diff={
                    "base_filled": [],
                    "augmented": [
                        [p.domain, p.slot, p.value] for p in knowledge.new_pairs
                    ],
                },
            )
        return record

    # -- status & rating -------------------------------------------------------

    def terminate(self) -> None:
        if self.status != STATUS_ACTIVE:
            raise SessionStateError(f"session is {self.status}")
        self.status = STATUS_TERMINATED

    def set_rating(self, sr: bool, hr: int) -> None:
        if self.status == STATUS_ACTIVE:
            raise SessionStateError("session is still active")
        if self.rating is not None:
            raise SessionStateError("session already rated")
        if not isinstance(hr, int) or not 1 <= hr <= 5:
            raise RatingError(f"quality rating must be an integer in 1..5, got {hr!r}")
        if self.status == STATUS_TERMINATED and sr:
            raise RatingError("early-terminated sessions are failures: SR must be false")
        self.rating = {"sr": bool(sr), "hr": int(hr)}
