"""World-aware scripted providers and the reference-act oracle.

These are the offline stand-ins for live language models: the respondent
oracle derives implicit fills straight from the world's dependency rules,
the noisy variant sprinkles in fabricated fills, and the judge oracle
endorses exactly the claims the rules (or the dialogue text) support.
They parse the same prompts a live model would see, so the full render ->
complete -> parse path is exercised.
"""

from __future__ import annotations

import re

import numpy as np

from vlkrl.core.actions import DialogueAct
from vlkrl.core.goals import UserGoal
from vlkrl.core.ontology import EMPTY, Ontology
from vlkrl.core.state import deserialize_state, serialize_state
from vlkrl.env.database import db_query
from vlkrl.env.world import World
from vlkrl.gateway.prompts import STOP_TOKEN

_CLAIM_RE = re.compile(r"CLAIM (\S+) \[(\w+)\]: (\S+) = (.*?) \| ")
_RETRY_CONSTRAINT_RE = re.compile(r"Constraint: The (\S+) (\S+) should be (.+?)\.")


def _state_text_from_prompt(prompt: str, marker: str) -> str:
    index = prompt.rfind(marker + "@")
    if index < 0:
        raise ValueError(f"prompt has no '{marker}@' state block")
    start = index + len(marker) + 1
    end = prompt.find("@", start)
    if end < 0:
        raise ValueError("unterminated state block in prompt")
    return prompt[start:end]


def _prompt_text(messages: list[tuple[str, str]]) -> str:
    return "\n".join(text for _, text in messages)


def stated_value(world: World, state, domain: str, slot: str) -> str:
    """Slot value for (domain, slot): the belief entry, else the value the
    user stated verbatim ("<domain> <slot phrase>" marker plus an
    exactly-legal value in the same utterance), else EMPTY."""
    value = state.slot_value(domain, slot)
    if value not in (EMPTY, "dontcare"):
        return value
    marker = f"{domain} {slot.replace('_', ' ')}"
    for speaker, text in state.history:
        if speaker != "user":
            continue
        lowered = text.lower()
        if marker not in lowered:
            continue
        for candidate in sorted(world.ontology.legal_values(domain, slot)):
            if candidate.lower() in lowered:
                return candidate
    return EMPTY


class OracleRespondentProvider:
    """Emits ground-truth implicit fills derived from the world rules.

    For each rule whose source slot is filled and target slot is empty in
    the prompted state, the target is filled with the rule's canonical
    value. Answers judge questions consistently with the claim.
    """

    def __init__(self, world: World, confidence: float = 0.95):
        self.world = world
        self.confidence = confidence
        self.calls = 0

    def _propose(self, prompt: str) -> str:
        state_text = _state_text_from_prompt(prompt, "Q: ")
        state = deserialize_state(state_text, self.world.ontology)
        belief = {d: dict(s) for d, s in state.belief_state.items()}
        self._fill_stated(belief, state)
        self._apply_fills(belief)
        updated = state.advanced(belief_state=belief)
        return (
            f"@{serialize_state(updated)}@, confidence coefficient: "
            f"${self.confidence}$"
        )

    def _fill_stated(self, belief: dict[str, dict[str, str]],
                     state) -> None:
        """Ground slot values the user stated verbatim.

        Matters for live (human-typed) sessions, where no structured user
        acts fill the base belief.
        """
        for domain, slot in self.world.ontology.slot_pairs():
            if belief[domain][slot] != EMPTY:
                continue
            value = stated_value(self.world, state, domain, slot)
            if value:
                belief[domain][slot] = value

    def _apply_fills(self, belief: dict[str, dict[str, str]]) -> None:
        for rule in sorted(self.world.rules, key=lambda r: r.id):
            src_domain, src_slot = rule.source
            dst_domain, dst_slot = rule.target
            source_value = belief.get(src_domain, {}).get(src_slot, EMPTY)
            if source_value in (EMPTY, "dontcare"):
                continue
            if belief.get(dst_domain, {}).get(dst_slot, EMPTY) != EMPTY:
                continue
            fill = rule.fill_value(source_value)
            if fill in self.world.ontology.legal_values(dst_domain, dst_slot):
                belief[dst_domain][dst_slot] = fill

    def _answer(self, prompt: str) -> str:
        match = _CLAIM_RE.search(prompt)
        if match:
            _, _, slot, value = match.groups()
            return f"Yes. {slot} = {value} follows from the stated travel plans."
        return "Yes, that still holds."

    def _retry_pairs(self, prompt: str) -> str:
        match = _RETRY_CONSTRAINT_RE.search(prompt)
        if match:
            domain, slot, value = match.groups()
            return f"{domain}.{slot} = {value}"
        return "unparseable constraint"

    def complete(self, role, model, messages, temperature, max_tokens):
        self.calls += 1
        prompt = _prompt_text(messages)
        if "QUESTION:" in prompt:
            return self._answer(prompt)
        if "Express this constraint as slot-value pairs" in prompt:
            return self._retry_pairs(prompt)
        return self._propose(prompt)

    @property
    def call_count(self) -> int:
        return self.calls


class NoisyOracleRespondentProvider(OracleRespondentProvider):
    """Oracle fills plus seeded fabrications.

    With probability ``noise_rate`` per proposal, one empty slot of an
    already-mentioned domain is filled with a legal but rule-inconsistent
    value. Outputs carrying a fabrication report lower confidence.
    """

    def __init__(self, world: World, seed: int, noise_rate: float = 0.6,
                 confidence: float = 0.95, noisy_confidence: float = 0.55):
        super().__init__(world, confidence)
        self.rng = np.random.default_rng(seed)
        self.noise_rate = noise_rate
        self.noisy_confidence = noisy_confidence

    def _propose(self, prompt: str) -> str:
        state_text = _state_text_from_prompt(prompt, "Q: ")
        state = deserialize_state(state_text, self.world.ontology)
        belief = {d: dict(s) for d, s in state.belief_state.items()}
        self._apply_fills(belief)
        fabricated = False
        if self.rng.random() < self.noise_rate:
            fabricated = self._fabricate(belief, state)
        updated = state.advanced(belief_state=belief)
        confidence = self.noisy_confidence if fabricated else self.confidence
        return f"@{serialize_state(updated)}@, confidence coefficient: ${confidence}$"

    def _fabricate(self, belief, state) -> bool:
        mentioned = {
            domain for domain, slots in state.belief_state.items()
            if any(v != EMPTY for v in slots.values())
        } | set(state.request_state)
        empty_slots = [
            (domain, slot)
            for domain in sorted(mentioned)
            for slot in sorted(self.world.ontology.slots_by_domain.get(domain, ()))
            if belief[domain][slot] == EMPTY
        ]
        if not empty_slots:
            return False
        domain, slot = empty_slots[int(self.rng.integers(len(empty_slots)))]
        values = list(self.world.ontology.legal_values(domain, slot))
        # avoid accidentally fabricating the rule-consistent value
        for rule in self.world.rules:
            if rule.target == (domain, slot):
                source_value = belief.get(rule.source[0], {}).get(rule.source[1], EMPTY)
                if source_value not in (EMPTY, "dontcare"):
                    correct = rule.fill_value(source_value)
                    values = [v for v in values if v != correct]
        if not values:
            return False
        belief[domain][slot] = values[int(self.rng.integers(len(values)))]
        return True


class OracleJudgeProvider:
    """Accepts exactly the claims the dialogue or the world rules support.

    Asks one scripted probe, then stops; the verdict is True when the
    claimed value either appears verbatim in the dialogue history or
    matches the canonical fill of a rule whose source is stated.
    """

    def __init__(self, world: World):
        self.world = world
        self.calls = 0

    def _supports(self, prompt: str) -> tuple[str, bool]:
        match = _CLAIM_RE.search(prompt)
        if not match:
            return "claim", False
        claim_id, _, slot_ref, value = match.groups()
        state_text = _state_text_from_prompt(prompt, "DIALOGUE STATE:\n")
        state = deserialize_state(state_text, self.world.ontology)
        history_text = "\n".join(text for _, text in state.history)
        if value and value in history_text:
            return claim_id, True
        domain, _, slot = slot_ref.partition(".")
        for rule in self.world.rules:
            if rule.target != (domain, slot):
                continue
            source_value = stated_value(self.world, state, *rule.source)
            if source_value == EMPTY:
                continue
            if rule.fill_value(source_value) == value:
                return claim_id, True
        return claim_id, False

    def complete(self, role, model, messages, temperature, max_tokens):
        self.calls += 1
        prompt = _prompt_text(messages)
        if "Render your verdict" in prompt:
            claim_id, supported = self._supports(prompt)
            return f"{claim_id}: {'True' if supported else 'False'}"
        if "ROUNDS: none yet." in prompt:
            match = _CLAIM_RE.search(prompt)
            if match:
                _, _, slot, value = match.groups()
                return f"What in the dialogue supports {slot} = {value}?"
            return "What supports this claim?"
        return STOP_TOKEN

    @property
    def call_count(self) -> int:
        return self.calls


class EchoRespondentProvider:
    """Returns the prompted state unchanged with confidence 1.0."""

    def __init__(self, ontology: Ontology):
        self.ontology = ontology
        self.calls = 0

    def complete(self, role, model, messages, temperature, max_tokens):
        self.calls += 1
        prompt = _prompt_text(messages)
        if "QUESTION:" in prompt:
            return "Yes."
        state_text = _state_text_from_prompt(prompt, "Q: ")
        return f"@{state_text}@, confidence coefficient: $1.0$"

    @property
    def call_count(self) -> int:
        return self.calls


class DualRoleProvider:
    """Routes respondent/judge/policy roles to separate providers."""

    def __init__(self, respondent, judge, policy=None):
        self.routes = {"respondent": respondent, "judge": judge, "policy": policy}

    def complete(self, role, model, messages, temperature, max_tokens):
        target = self.routes.get(role)
        if target is None:
            raise ValueError(f"no provider routed for role '{role}'")
        return target.complete(role, model, messages, temperature, max_tokens)

    @property
    def call_count(self) -> int:
        return sum(
            p.call_count for p in self.routes.values()
            if p is not None and hasattr(p, "call_count")
        )


class OraclePolicyProvider:
    """Scripted stand-in for a prompted action-selection model.

    Bound to the live environment session by the episode runner; replies
    with the reference act so offline no-RL runs are deterministic.
    """

    def __init__(self, world: World):
        self.world = world
        self.session = None
        self.calls = 0

    def bind(self, session) -> None:
        self.session = session

    def complete(self, role, model, messages, temperature, max_tokens):
        self.calls += 1
        if self.session is None:
            return "Action = goodbye"
        action = reference_act(
            self.world, self.session.goal, self.session.agenda,
            self.session.merged_belief(),
        )
        return f"Action = {action.name()}"

    @property
    def call_count(self) -> int:
        return self.calls


def reference_act(
    world: World,
    goal: UserGoal,
    agenda,
    merged_belief: dict[str, dict[str, str]],
) -> DialogueAct:
    """The deterministic ideal act for the current situation.

    Priority: answer the oldest pending request, book a ready domain,
    request the first missing explicit goal slot, best-effort book, then
    goodbye.
    """
    pending = agenda.pending_requests()
    if pending:
        domain, slot = pending[0]
        entities = db_query(world.database, domain, merged_belief.get(domain, {}))
        pool = entities or list(world.database.entities(domain))
        value = pool[0][slot] if pool else ""
        if value:
            return DialogueAct("inform", domain, slot, value)

    explicit = {(c.domain, c.slot): c.value for c in goal.explicit_constraints()}
    implicit = [(c.domain, c.slot) for c in goal.implicit_constraints()]

    for domain in goal.active_domains:
        if domain in agenda.bookings:
            continue
        ready = all(
            merged_belief[domain].get(slot, EMPTY) != EMPTY
            for (d, slot) in list(explicit) + implicit if d == domain
        )
        if ready:
            return DialogueAct("book", domain)

    for domain in goal.active_domains:
        for (d, slot), _ in sorted(explicit.items()):
            if d == domain and merged_belief[domain].get(slot, EMPTY) == EMPTY:
                return DialogueAct("request", d, slot)

    for domain in goal.active_domains:
        if domain not in agenda.bookings:
            return DialogueAct("book", domain)
    return DialogueAct("goodbye")
