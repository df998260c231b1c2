"""Parsers for the delimited respondent/judge/policy output formats."""

from __future__ import annotations

import logging
import re

from vlkrl.core.claims import ConstraintClaim
from vlkrl.core.ontology import EMPTY, Ontology
from vlkrl.core.state import DialogueState, deserialize_state

log = logging.getLogger(__name__)

# Fields the respondent must never touch; only belief_state may change.
PROTECTED_FIELDS = ("user_action", "system_action", "request_state", "terminated", "history")

_CONFIDENCE_RE = re.compile(r"\$\s*([0-9]*\.?[0-9]+)\s*\$")
_ACTION_RE = re.compile(r"Action\s*=\s*\[?\s*([^\]\n]+?)\s*\]?\s*$", re.MULTILINE)
_VERDICT_RE = re.compile(r"^\s*(\S+)\s*:\s*(True|False)\s*$")


class OutputFormatError(ValueError):
    """Delimiters or structure of a model output were not as mandated."""


class ProtectedFieldError(ValueError):
    """A respondent output modified a protected state field."""


class ConfidenceRangeError(ValueError):
    """The reported confidence coefficient falls outside [0, 1]."""


def parse_respondent_output(
    raw: str, input_state: DialogueState, ontology: Ontology,
) -> tuple[DialogueState, float]:
    """Extract the updated state between the outermost '@' pair and the
    confidence between '$' markers, rejecting protected-field edits."""
    first = raw.find("@")
    last = raw.rfind("@")
    if first < 0 or last <= first:
        raise OutputFormatError("missing '@' state delimiters")
    state_text = raw[first + 1:last]
    remainder = raw[:first] + raw[last + 1:]
    confidences = _CONFIDENCE_RE.findall(remainder)
    if len(confidences) == 0:
        raise OutputFormatError("missing '$' confidence delimiters")
    if len(confidences) > 1:
        raise OutputFormatError("multiple '$' confidence groups")
    confidence = float(confidences[0])
    if not 0.0 <= confidence <= 1.0:
        raise ConfidenceRangeError(f"confidence {confidence} outside [0, 1]")

    output_state = deserialize_state(state_text, ontology)
    if output_state.user_action != input_state.user_action:
        raise ProtectedFieldError("output modified user_action")
    if output_state.system_action != input_state.system_action:
        raise ProtectedFieldError("output modified system_action")
    if output_state.request_state != input_state.request_state:
        raise ProtectedFieldError("output modified request_state")
    if output_state.terminated != input_state.terminated:
        raise ProtectedFieldError("output modified terminated")
    if output_state.history != input_state.history:
        raise ProtectedFieldError("output modified history")
    return output_state, confidence


def derive_claims(
    input_state: DialogueState, output_state: DialogueState,
    confidence: float, ontology: Ontology, turn: int = 0,
) -> list[ConstraintClaim]:
    """One claim per slot the output filled that was empty in the input.

    A claim is explicit when its value appears verbatim in the history
    text, implicit otherwise. Changes to already-filled slots never yield
    claims.
    """
    history_text = "\n".join(text for _, text in input_state.history)
    claims: list[ConstraintClaim] = []
    index = 0
    for domain, slot in ontology.slot_pairs():
        before = input_state.slot_value(domain, slot)
        after = output_state.slot_value(domain, slot)
        if before == EMPTY and after != EMPTY:
            index += 1
            kind = "explicit" if after in history_text else "implicit"
            ref = Ontology.qualified(domain, slot)
            claims.append(
                ConstraintClaim(
                    id=f"t{turn}-k{index}",
                    text=f"The {domain} {slot} should be {after}.",
                    kind=kind,
                    hinted_pairs=((ref, after),),
                    confidence=confidence,
                )
            )
        elif before != EMPTY and after != before:
            log.debug("ignoring edit to filled slot %s.%s", domain, slot)
    return claims


def parse_action_reply(raw: str) -> str:
    """Pull the action name out of an ``Action = [name]`` reply."""
    match = _ACTION_RE.search(raw)
    if not match:
        raise OutputFormatError("no 'Action = ...' line in reply")
    return match.group(1).strip()


def parse_verdict_line(raw: str, claim_id: str) -> bool | None:
    """Parse a one-line ``claim_id: True|False`` verdict.

    Returns None when the output does not match the mandated format, so
    callers can fail closed.
    """
    for line in raw.strip().splitlines():
        match = _VERDICT_RE.match(line)
        if match and match.group(1) == claim_id:
            return match.group(2) == "True"
    return None
