"""Prompt-with-retries grounding: the alternative to the rule-based mapper.

The respondent is asked to emit ontology-aligned ``domain.slot = value``
lines directly. A deterministic parser validates each attempt against the
schema; invalid output triggers a re-prompt, up to the budget. Attempt
counts are recorded so runtime overhead can be reported.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from vlkrl.core.claims import ConstraintClaim, SlotValuePair
from vlkrl.core.ontology import Ontology, parse_slot_ref
from vlkrl.gateway.gateway import LlmGateway

log = logging.getLogger(__name__)

_LINE_RE = re.compile(r"^\s*(?P<slot>[A-Za-z][\w.]*)\s*=\s*(?P<value>[^=]+?)\s*$")


@dataclass(frozen=True)
class RetryOutcome:
    pairs: tuple[SlotValuePair, ...]
    attempts: int
    discarded: bool


def _validate_attempt(
    raw: str, ontology: Ontology, claim_id: str,
) -> list[SlotValuePair] | None:
    """Parse one attempt; None means the attempt is rejected.

    Rejection causes: empty output, any line off the key=value format,
    slot names outside the schema, or values not legal for their slot.
    """
    lines = [line for line in raw.strip().splitlines() if line.strip()]
    if not lines:
        return None
    pairs: list[SlotValuePair] = []
    for line in lines:
        match = _LINE_RE.match(line)
        if not match:
            return None
        ref = parse_slot_ref(match.group("slot"), ontology)
        if ref is None:
            return None
        domain, slot = ref
        value = match.group("value").strip()
        if value not in ontology.legal_values(domain, slot):
            return None
        pairs.append(SlotValuePair(domain, slot, value, 1.0, claim_id))
    return pairs


def _retry_prompt(claim: ConstraintClaim, ontology: Ontology, attempt: int) -> list:
    slot_lines = []
    for domain, slot in ontology.slot_pairs():
        values = ", ".join(ontology.legal_values(domain, slot))
        slot_lines.append(f"- {domain}.{slot}: {values}")
    preamble = ""
    if attempt > 1:
        preamble = (
            "Your previous output was rejected by the schema validator. "
            "Follow the format exactly.\n\n"
        )
    text = (
        f"{preamble}Constraint: {claim.text}\n\n"
        "Express this constraint as slot-value pairs, one per line, in the "
        "exact form domain.slot = value. Use only the slots and values "
        "below. Output nothing else.\n\n" + "\n".join(slot_lines)
    )
    return [("user", text)]


def map_with_retries(
    claim: ConstraintClaim,
    budget: int,
    gateway: LlmGateway,
    ontology: Ontology,
) -> RetryOutcome:
    """Re-prompt until the validator accepts or the budget is spent.

    When every attempt fails the claim's output is discarded for the turn.
    """
    if budget < 1:
        raise ValueError("retry budget must be >= 1")
    for attempt in range(1, budget + 1):
        raw = gateway.complete("respondent", _retry_prompt(claim, ontology, attempt))
        pairs = _validate_attempt(raw, ontology, claim.id)
        if pairs is not None:
            return RetryOutcome(tuple(pairs), attempts=attempt, discarded=False)
        log.debug("retry-mapper attempt %d/%d rejected for %s", attempt, budget, claim.id)
    return RetryOutcome((), attempts=budget, discarded=True)
