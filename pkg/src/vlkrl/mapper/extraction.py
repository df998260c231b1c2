"""Schema-guided extraction of candidate slot-value pairs from claim text.

The cue patterns are a versioned rule set (EXTRACTION_TEMPLATE_ID) and are
co-designed with the synthetic world's utterance templates: every phrasing
the template bank can produce is covered by at least one cue. Extend the
list rather than editing existing entries so old diagnostics stay
interpretable.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from vlkrl.core.claims import ConstraintClaim

log = logging.getLogger(__name__)

EXTRACTION_TEMPLATE_ID = "cues-v1"

_SLOT = r"(?P<slot>[a-z][a-z0-9_. ]*?)"
_VALUE = r"(?P<value>[\w][\w .:-]*?)"

# Order matters: first match per sentence wins.
CUE_PATTERNS: tuple[re.Pattern, ...] = tuple(
    re.compile(pattern, re.IGNORECASE)
    for pattern in (
        rf"\bthe {_SLOT} (?:is|are) (?:definitely |probably |certainly )?{_VALUE}[.,;!?]",
        rf"\b{_SLOT} should be {_VALUE}[.,;!?]",
        rf"\b{_SLOT} must be {_VALUE}[.,;!?]",
        rf"\b{_SLOT} to be {_VALUE}[.,;!?]",
        rf"\b{_SLOT} needs to be {_VALUE}[.,;!?]",
        rf"\b{_SLOT} has to be {_VALUE}[.,;!?]",
        rf"\b{_SLOT} ought to be {_VALUE}[.,;!?]",
        rf"\b{_SLOT} will be {_VALUE}[.,;!?]",
        rf"\b{_SLOT} (?:is|are) set to {_VALUE}[.,;!?]",
        rf"\b{_SLOT} (?:equals|matches) {_VALUE}[.,;!?]",
        rf"\b{_SLOT}\s*=\s*{_VALUE}[.,;!?]",
        rf"\b{_SLOT}\s*:\s*{_VALUE}[.,;!?]",
        rf"\bset (?:the )?{_SLOT} to {_VALUE}[.,;!?]",
        rf"\blooking for (?:a |an )?{_VALUE} {_SLOT}[.,;!?]",
    )
)


@dataclass(frozen=True)
class Candidate:
    """One raw (slot_text, value_text) candidate with its provenance."""

    claim_id: str
    slot_text: str
    value_text: str
    hinted: bool


def _strip_article(text: str) -> str:
    for article in ("the ", "a ", "an "):
        if text.startswith(article):
            return text[len(article):]
    return text


def extract(claims: list[ConstraintClaim]) -> list[Candidate]:
    """Candidates from hinted pairs directly, else from cue templates.

    Deterministic and training-free; claims matching no template yield
    nothing (logged).
    """
    candidates: list[Candidate] = []
    for claim in claims:
        if claim.hinted_pairs:
            for slot_text, value_text in claim.hinted_pairs:
                candidates.append(Candidate(claim.id, slot_text, value_text, hinted=True))
            continue
        text = claim.text.strip()
        if text and text[-1] not in ".,;!?":
            text += "."
        matched = False
        for pattern in CUE_PATTERNS:
            match = pattern.search(text)
            if match:
                candidates.append(
                    Candidate(
                        claim.id,
                        _strip_article(match.group("slot").strip()),
                        match.group("value").strip(),
                        hinted=False,
                    )
                )
                matched = True
                break
        if not matched:
            log.info("no extraction template matched claim %s: %r", claim.id, claim.text)
    return candidates
