"""Rule-based agenda user simulator.

Every explicit goal value is rendered verbatim into the user's utterances;
implicit values never are (requests for them get a value-free deflection).
The simulator is deterministic given (goal, agenda state, system action):
template variety comes from an internal counter, not randomness.

Patience counts consecutive unproductive system actions; it resets on
progress and terminates the dialogue early (a failure) when exhausted.
A second constraint-violating booking for the same domain also ends it.
"""

from __future__ import annotations

from dataclasses import dataclass

from vlkrl.core.actions import DialogueAct
from vlkrl.core.goals import UserGoal
from vlkrl.core.ontology import DONTCARE
from vlkrl.env.world import World

DEFAULT_PATIENCE = 5

# Versioned utterance bank; the mapper's extraction cues are co-designed
# with these phrasings, so extend rather than edit.
TEMPLATE_BANK_ID = "utterances-v1"

INFORM_TEMPLATES = (
    "I want the {domain} {slot} to be {value}.",
    "The {domain} {slot} should be {value}.",
    "For the {domain}, make the {slot} {value}, please.",
    "I am looking for a {domain} whose {slot} is {value}.",
)
REQUEST_TEMPLATES = (
    "What is the {slot} for the {domain}?",
    "Could you tell me the {domain} {slot}?",
)
ACK_ANSWER = "Thanks, good to know."
ACK_BOOKING = "Great, thanks for booking the {domain}."
DONTCARE_REPLY = "Any {slot} is fine for the {domain}."
CORRECTION = "No, the {domain} {slot} should be {value}."
AFFIRM = "Yes, exactly."
REPEAT_REPLY = "As I said, the {domain} {slot} should be {value}."
OBJECTION = "That {domain} booking does not fit my plans. Please fix it."
NO_MATCH_REPLY = "Nothing available? Please try the {domain} again."
NOT_NEEDED_REPLY = "I do not need a {domain}, thanks."
ALREADY_BOOKED_REPLY = "You already booked the {domain}."
NUDGE = "Is there anything else you need from me to finish the bookings?"
GOODBYE = "Thanks, that is all I needed. Goodbye."
GAVE_UP = "This is going nowhere. I give up."
GENERIC_DEFLECTION = "Whatever fits the rest of my plans."


def _phrase(slot: str) -> str:
    return slot.replace("_", " ")


@dataclass(frozen=True)
class UserTurn:
    utterance: str
    acts: tuple[DialogueAct, ...]
    done: bool
    terminated_early: bool


class UserAgenda:
    """Pending user acts derived from a goal, plus reaction rules."""

    def __init__(self, world: World, goal: UserGoal, patience: int = DEFAULT_PATIENCE):
        self.world = world
        self.goal = goal
        self.patience_limit = patience
        self.patience = patience
        self._counter = 0
        self.stated: dict[tuple[str, str], str] = {}
        self.answered: set[tuple[str, str]] = set()
        self.issued_requests: set[tuple[str, str]] = set()
        self.bookings: dict[str, dict[str, str]] = {}
        self.violations: dict[str, int] = {}
        self.done = False
        self.terminated_early = False

        self._explicit = {
            (c.domain, c.slot): c.value for c in goal.explicit_constraints()
        }
        self._implicit_targets = {
            (c.domain, c.slot): c for c in goal.implicit_constraints()
        }
        self._agenda: list[tuple] = []
        for domain in goal.active_domains:
            for slot in sorted(world.ontology.slots_by_domain[domain]):
                if (domain, slot) in self._explicit:
                    self._agenda.append(
                        ("inform", domain, slot, self._explicit[(domain, slot)])
                    )
            for slot in goal.requests.get(domain, ()):
                self._agenda.append(("request", domain, slot))

    # -- bookkeeping the episode runner calls --------------------------------

    def note_booking(self, domain: str, entity: dict[str, str]) -> None:
        """Record an accepted booking; pending informs for it become moot."""
        self.bookings[domain] = entity
        self._agenda = [
            item for item in self._agenda
            if not (item[0] == "inform" and item[1] == domain)
        ]

    def pending_requests(self) -> list[tuple[str, str]]:
        return sorted(self.issued_requests - self.answered)

    def all_requests_answered(self) -> bool:
        return all(pair in self.answered for pair in self.goal.requested_pairs())

    def everything_done(self) -> bool:
        return self.all_requests_answered() and all(
            domain in self.bookings for domain in self.goal.active_domains
        )

    # -- the user's turn ------------------------------------------------------

    def user_turn(self, system_action: DialogueAct | None,
                  system_result: dict | None) -> UserTurn:
        """React to the previous system action, then advance the agenda."""
        if self.done:
            raise ValueError("dialogue already finished")
        segments: list[str] = []
        acts: list[DialogueAct] = []
        self._stated_explicit = False

        productive = True if system_action is None else self._react(
            system_action, system_result or {}, segments, acts
        )

        if self.terminated_early:
            self.done = True
            utterance = " ".join(segments + [GAVE_UP]) if segments else GAVE_UP
            return UserTurn(utterance, tuple(acts), True, True)

        if self.everything_done():
            self.done = True
            return UserTurn(" ".join(segments + [GOODBYE]), tuple(acts), True, False)

        if not self._stated_explicit:
            self._advance(segments, acts)

        if productive:
            self.patience = self.patience_limit
        else:
            self.patience -= 1
            if self.patience <= 0:
                self.done = True
                self.terminated_early = True
                utterance = " ".join(segments + [GAVE_UP]) if segments else GAVE_UP
                return UserTurn(utterance, tuple(acts), True, True)

        if not segments:
            segments.append(NUDGE)
        return UserTurn(" ".join(segments), tuple(acts), False, False)

    # -- internals -------------------------------------------------------------

    def _react(self, action: DialogueAct, result: dict,
               segments: list[str], acts: list[DialogueAct]) -> bool:
        handler = {
            "request": self._react_request,
            "inform": self._react_inform,
            "confirm": self._react_confirm,
            "book": self._react_book,
        }.get(action.act_type)
        if handler is None:
            return False
        return handler(action, result, segments, acts)

    def _state_value(self, domain: str, slot: str, value: str,
                     segments: list[str], acts: list[DialogueAct],
                     template: str | None = None) -> None:
        if template is None:
            template = INFORM_TEMPLATES[self._counter % len(INFORM_TEMPLATES)]
            self._counter += 1
        segments.append(template.format(domain=domain, slot=_phrase(slot), value=value))
        acts.append(DialogueAct("inform", domain, slot, value))
        self.stated[(domain, slot)] = value
        self._stated_explicit = True
        self._agenda = [
            item for item in self._agenda
            if not (item[0] == "inform" and item[1] == domain and item[2] == slot)
        ]

    def _dontcare(self, domain: str, slot: str,
                  segments: list[str], acts: list[DialogueAct]) -> bool:
        segments.append(DONTCARE_REPLY.format(domain=domain, slot=_phrase(slot)))
        acts.append(DialogueAct("inform", domain, slot, DONTCARE))
        fresh = self.stated.get((domain, slot)) != DONTCARE
        self.stated[(domain, slot)] = DONTCARE
        return fresh

    def _deflect(self, domain: str, slot: str, segments: list[str]) -> None:
        spec = self._implicit_targets[(domain, slot)]
        try:
            text = self.world.rule_by_id(spec.rule_id).deflection or GENERIC_DEFLECTION
        except KeyError:
            text = GENERIC_DEFLECTION
        segments.append(text)

    def _react_request(self, action, result, segments, acts) -> bool:
        key = (action.domain, action.slot)
        if key in self._explicit:
            value = self._explicit[key]
            if key in self.stated:
                segments.append(REPEAT_REPLY.format(
                    domain=action.domain, slot=_phrase(action.slot), value=value))
                acts.append(DialogueAct("inform", action.domain, action.slot, value))
                return False
            self._state_value(action.domain, action.slot, value, segments, acts)
            return True
        if key in self._implicit_targets:
            self._deflect(action.domain, action.slot, segments)
            return False
        if action.domain in self.goal.active_domains:
            return self._dontcare(action.domain, action.slot, segments, acts)
        segments.append(NOT_NEEDED_REPLY.format(domain=action.domain))
        return False

    def _react_inform(self, action, result, segments, acts) -> bool:
        key = (action.domain, action.slot)
        if key in self.issued_requests and key not in self.answered:
            self.answered.add(key)
            segments.append(ACK_ANSWER)
            return True
        if key in self._explicit and key not in self.stated:
            value = self._explicit[key]
            template = None if action.value == value else CORRECTION
            self._state_value(action.domain, action.slot, value, segments, acts,
                              template=template)
            return True
        return False

    def _react_confirm(self, action, result, segments, acts) -> bool:
        key = (action.domain, action.slot)
        if key in self._explicit:
            value = self._explicit[key]
            if key in self.stated:
                if action.value == value:
                    segments.append(AFFIRM)
                else:
                    segments.append(CORRECTION.format(
                        domain=action.domain, slot=_phrase(action.slot), value=value))
                    acts.append(DialogueAct("inform", action.domain, action.slot, value))
                return False
            template = None if action.value == value else CORRECTION
            self._state_value(action.domain, action.slot, value, segments, acts,
                              template=template)
            return True
        if key in self._implicit_targets:
            self._deflect(action.domain, action.slot, segments)
            return False
        if action.domain in self.goal.active_domains:
            return self._dontcare(action.domain, action.slot, segments, acts)
        segments.append(NOT_NEEDED_REPLY.format(domain=action.domain))
        return False

    def _react_book(self, action, result, segments, acts) -> bool:
        status = result.get("status", "no_match")
        domain = action.domain
        if status == "ok":
            segments.append(ACK_BOOKING.format(domain=domain))
            return True
        if status == "violates":
            self.violations[domain] = self.violations.get(domain, 0) + 1
            if self.violations[domain] >= 2:
                self.terminated_early = True
            segments.append(OBJECTION.format(domain=domain))
            return False
        if status == "not_needed":
            segments.append(NOT_NEEDED_REPLY.format(domain=domain))
            return False
        if status == "already":
            segments.append(ALREADY_BOOKED_REPLY.format(domain=domain))
            return False
        segments.append(NO_MATCH_REPLY.format(domain=domain))
        return False

    def _advance(self, segments: list[str], acts: list[DialogueAct]) -> None:
        """Volunteer up to two pending informs, or issue one request."""
        emitted = 0
        while self._agenda and emitted < 2:
            item = self._agenda[0]
            if item[0] == "inform":
                self._agenda.pop(0)
                _, domain, slot, value = item
                self._state_value(domain, slot, value, segments, acts)
                emitted += 1
            else:
                if emitted > 0:
                    break
                self._agenda.pop(0)
                _, domain, slot = item
                template = REQUEST_TEMPLATES[self._counter % len(REQUEST_TEMPLATES)]
                self._counter += 1
                segments.append(template.format(domain=domain, slot=_phrase(slot)))
                acts.append(DialogueAct("request", domain, slot))
                self.issued_requests.add((domain, slot))
                break
