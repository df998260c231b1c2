"""Dialogue state and its canonical text form.

The text form is strict JSON with lexicographically sorted keys, so the
same state always serializes to the same bytes and domains/slots appear
in a fixed order. Acts are encoded as ``[act_type, domain, slot, value]``
quadruples with "" for absent fields.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from vlkrl.core.actions import DialogueAct
from vlkrl.core.ontology import DONTCARE, EMPTY, Ontology


class MalformedStateError(ValueError):
    """Canonical state text could not be parsed or failed validation."""


@dataclass(frozen=True)
class DialogueState:
    """Belief state plus conversational bookkeeping for one session.

    ``turn`` counts completed system turns. Once ``terminated`` is set the
    state accepts no further mutation (enforced by ``advanced``).
    """

    belief_state: dict[str, dict[str, str]]
    user_action: tuple[DialogueAct, ...] = ()
    system_action: tuple[DialogueAct, ...] = ()
    request_state: dict[str, tuple[str, ...]] = None  # type: ignore[assignment]
    history: tuple[tuple[str, str], ...] = ()
    terminated: bool = False
    turn: int = 0

    def __post_init__(self):
        if self.request_state is None:
            object.__setattr__(self, "request_state", {})

    def slot_value(self, domain: str, slot: str) -> str:
        return self.belief_state.get(domain, {}).get(slot, EMPTY)

    def is_filled(self, domain: str, slot: str) -> bool:
        return self.slot_value(domain, slot) != EMPTY

    def advanced(self, **changes) -> "DialogueState":
        """Return a copy with ``changes`` applied; terminated states refuse."""
        if self.terminated:
            raise ValueError("terminated state accepts no further mutation")
        return replace(self, **changes)


def empty_state(ontology: Ontology) -> DialogueState:
    belief = {
        domain: {slot: EMPTY for slot in ontology.slots_by_domain[domain]}
        for domain in ontology.domains
    }
    return DialogueState(belief_state=belief)


def _acts_to_lists(acts: tuple[DialogueAct, ...]) -> list[list[str]]:
    return [[a.act_type, a.domain, a.slot, a.value] for a in acts]


def _acts_from_lists(raw, label: str) -> tuple[DialogueAct, ...]:
    acts = []
    for item in raw:
        if not isinstance(item, list) or len(item) != 4:
            raise MalformedStateError(f"malformed act in {label}: {item!r}")
        acts.append(DialogueAct(*item))
    return tuple(acts)


def serialize_state(state: DialogueState) -> str:
    """Canonical deterministic text form; inverse of deserialize_state."""
    payload = {
        "belief_state": {
            domain: dict(sorted(slots.items()))
            for domain, slots in sorted(state.belief_state.items())
        },
        "user_action": _acts_to_lists(state.user_action),
        "system_action": _acts_to_lists(state.system_action),
        "request_state": {
            domain: sorted(slots) for domain, slots in sorted(state.request_state.items())
        },
        "history": [[speaker, text] for speaker, text in state.history],
        "terminated": state.terminated,
        "turn": state.turn,
    }
    return json.dumps(payload, sort_keys=True, separators=(", ", ": "))


def deserialize_state(text: str, ontology: Ontology) -> DialogueState:
    """Parse the canonical form, validating every name against the ontology.

    Raises MalformedStateError naming the first offending token.
    """
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedStateError(f"not valid state text: {exc.msg}") from exc
    if not isinstance(payload, dict):
        raise MalformedStateError("state text must encode an object")
    expected = {
        "belief_state",
        "user_action",
        "system_action",
        "request_state",
        "history",
        "terminated",
        "turn",
    }
    for key in sorted(payload):
        if key not in expected:
            raise MalformedStateError(f"unknown field '{key}'")
    for key in sorted(expected):
        if key not in payload:
            raise MalformedStateError(f"missing field '{key}'")

    belief_raw = payload["belief_state"]
    belief: dict[str, dict[str, str]] = {}
    for domain in sorted(belief_raw):
        if domain not in ontology.domains:
            raise MalformedStateError(f"unknown domain '{domain}'")
        belief[domain] = {}
        for slot in sorted(belief_raw[domain]):
            if not ontology.has_slot(domain, slot):
                raise MalformedStateError(f"unknown slot '{domain}.{slot}'")
            value = belief_raw[domain][slot]
            if not isinstance(value, str):
                raise MalformedStateError(f"non-text value for '{domain}.{slot}'")
            legal = (EMPTY, DONTCARE) + ontology.legal_values(domain, slot)
            if value not in legal:
                raise MalformedStateError(
                    f"illegal value '{value}' for '{domain}.{slot}'"
                )
            belief[domain][slot] = value
    for domain in ontology.domains:
        if domain not in belief:
            raise MalformedStateError(f"missing domain '{domain}'")
        for slot in ontology.slots_by_domain[domain]:
            if slot not in belief[domain]:
                raise MalformedStateError(f"missing slot '{domain}.{slot}'")

    request_state: dict[str, tuple[str, ...]] = {}
    for domain in sorted(payload["request_state"]):
        if domain not in ontology.domains:
            raise MalformedStateError(f"unknown domain '{domain}' in request_state")
        slots = payload["request_state"][domain]
        for slot in slots:
            if not ontology.has_slot(domain, slot):
                raise MalformedStateError(f"unknown slot '{domain}.{slot}' in request_state")
        request_state[domain] = tuple(sorted(slots))

    history = []
    for item in payload["history"]:
        if not isinstance(item, list) or len(item) != 2:
            raise MalformedStateError(f"malformed history entry: {item!r}")
        history.append((str(item[0]), str(item[1])))

    if not isinstance(payload["terminated"], bool):
        raise MalformedStateError("'terminated' must be a boolean")
    if not isinstance(payload["turn"], int) or payload["turn"] < 0:
        raise MalformedStateError("'turn' must be a non-negative integer")

    return DialogueState(
        belief_state=belief,
        user_action=_acts_from_lists(payload["user_action"], "user_action"),
        system_action=_acts_from_lists(payload["system_action"], "system_action"),
        request_state=request_state,
        history=tuple(history),
        terminated=payload["terminated"],
        turn=payload["turn"],
    )
