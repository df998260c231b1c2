"""Policy drivers: how each mode picks the next system act."""

from __future__ import annotations

import numpy as np

from vlkrl.core.actions import enumerate_actions
from vlkrl.core.ontology import Ontology
from vlkrl.env.database import db_query
from vlkrl.gateway.gateway import LlmGateway
from vlkrl.orchestration.episode import EnvSession
from vlkrl.orchestration.oracles import reference_act
from vlkrl.orchestration.pipeline import TurnKnowledge
from vlkrl.policy.encoder import StateEncoder
from vlkrl.policy.llm_policy import llm_only_policy
from vlkrl.policy.nets import Mlp
from vlkrl.policy.ppo import select_action


class RlPolicyDriver:
    """Encodes the enriched state and queries the small policy net."""

    def __init__(self, policy: Mlp, encoder: StateEncoder, ontology: Ontology,
                 mode: str = "sample", rng: np.random.Generator | None = None):
        self.policy = policy
        self.encoder = encoder
        self.actions = enumerate_actions(ontology)
        self.mode = mode
        self.rng = rng

    def act(self, session: EnvSession, knowledge: TurnKnowledge, db_count: int):
        observation = self.encoder.encode(
            knowledge.enriched,
            db_count,
            session.state.turn,
            booked_domains=tuple(sorted(session.agenda.bookings)),
            claim_texts=knowledge.claim_texts,
        )
        index, log_prob = select_action(self.policy, observation, self.mode, self.rng)
        return self.actions[index], (observation, index, log_prob)


class LlmPolicyDriver:
    """Prompts for the action choice (the no-RL mode); not trainable."""

    def __init__(self, gateway: LlmGateway, ontology: Ontology):
        self.gateway = gateway
        self.ontology = ontology
        self.actions = enumerate_actions(ontology)

    def act(self, session: EnvSession, knowledge: TurnKnowledge, db_count: int):
        merged = knowledge.enriched.merged_belief()
        focus = session.focus_domain or session.goal.active_domains[0]
        db_results = db_query(
            session.world.database, focus, merged.get(focus, {})
        )[:5]
        action = llm_only_policy(
            self.gateway, self.actions, knowledge.enriched, db_results, self.ontology
        )
        return action, None


class OracleActDriver:
    """Plays the reference act directly; used by environment tests."""

    def act(self, session: EnvSession, knowledge: TurnKnowledge, db_count: int):
        action = reference_act(
            session.world, session.goal, session.agenda,
            knowledge.enriched.merged_belief(),
        )
        return action, None

