"""Value normalization, slot matching, and state enrichment.

Normalization selects the legal value with the highest embedding cosine
to the raw text and keeps it only when that similarity clears the
threshold tau; ties break lexicographically so every run is
deterministic. Slot matching has no threshold of its own — value
normalization is the quality gate.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from vlkrl.core.claims import ConstraintClaim, EnrichedState, SlotValuePair
from vlkrl.core.ontology import EMPTY, Ontology, parse_slot_ref
from vlkrl.core.state import DialogueState
from vlkrl.mapper.embedding import EmbeddingProvider, cosine
from vlkrl.mapper.extraction import EXTRACTION_TEMPLATE_ID, extract

log = logging.getLogger(__name__)


class UnknownSlotError(ValueError):
    """normalize_value was handed a slot the ontology does not define."""


@dataclass(frozen=True)
class MapperConfig:
    """Mapper settings. retry_budget 0 selects the rule-based mapper;
    a positive budget switches to prompt-with-retries grounding."""

    tau: float = 0.7
    retry_budget: int = 0
    extraction_templates: str = EXTRACTION_TEMPLATE_ID

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau {self.tau} outside [0, 1]")
        if self.retry_budget < 0:
            raise ValueError("retry_budget must be >= 0")


@dataclass(frozen=True)
class MapperDiagnostic:
    """Per-candidate audit row exposed through the service trace API."""

    claim_id: str
    slot_text: str
    value_text: str
    matched_domain: str
    matched_slot: str
    normalized_value: str
    similarity: float
    kept: bool
    reason: str


def normalize_value(
    domain: str,
    slot: str,
    value_text: str,
    ontology: Ontology,
    provider: EmbeddingProvider,
    tau: float,
) -> tuple[str, float] | None:
    """Most-similar legal value, or None when the best match falls below tau."""
    if not ontology.has_slot(domain, slot):
        raise UnknownSlotError(f"unknown slot '{domain}.{slot}'")
    query = provider.embed(value_text)
    best_value: str | None = None
    best_similarity = -2.0
    for candidate in sorted(ontology.legal_values(domain, slot)):
        similarity = cosine(query, provider.embed(candidate))
        if similarity > best_similarity:
            best_value, best_similarity = candidate, similarity
    assert best_value is not None
    if best_similarity >= tau:
        return best_value, best_similarity
    return None


def match_slot(
    slot_text: str, ontology: Ontology, provider: EmbeddingProvider,
) -> tuple[str, str]:
    """Closest (domain, slot) to the slot text by name embedding.

    Exact references (``hotel.area``, ``hotel_area``, unambiguous bare
    names) short-circuit the similarity search.
    """
    exact = parse_slot_ref(slot_text, ontology)
    if exact is not None:
        return exact
    query = provider.embed(slot_text)
    best: tuple[str, str] | None = None
    best_similarity = -2.0
    for domain, slot in ontology.slot_pairs():
        similarity = cosine(query, provider.embed(Ontology.qualified(domain, slot)))
        if similarity > best_similarity:
            best, best_similarity = (domain, slot), similarity
    if best is None:
        raise ValueError("ontology has no slots")
    return best


def map_claims(
    claims: list[ConstraintClaim],
    state: DialogueState | EnrichedState,
    ontology: Ontology,
    provider: EmbeddingProvider,
    config: MapperConfig,
) -> tuple[list[SlotValuePair], list[MapperDiagnostic]]:
    """Ground verified claims into slot-value pairs.

    extract -> match_slot (when the reference is inexact) -> normalize.
    Duplicates on one slot keep the highest similarity; pairs aimed at
    already-filled slots are dropped. All failures degrade to dropped
    candidates recorded in the diagnostics, never exceptions.
    """
    if isinstance(state, EnrichedState):
        belief = state.merged_belief()
    else:
        belief = state.belief_state
    diagnostics: list[MapperDiagnostic] = []
    best_pairs: dict[tuple[str, str], SlotValuePair] = {}
    for candidate in extract(sorted(claims, key=lambda c: c.id)):
        matched = match_slot(candidate.slot_text, ontology, provider)
        domain, slot = matched
        normalized = normalize_value(
            domain, slot, candidate.value_text, ontology, provider, config.tau
        )
        if normalized is None:
            diagnostics.append(
                MapperDiagnostic(
                    candidate.claim_id, candidate.slot_text, candidate.value_text,
                    domain, slot, "", 0.0, kept=False, reason="below_tau",
                )
            )
            continue
        value, similarity = normalized
        if belief.get(domain, {}).get(slot, EMPTY) != EMPTY:
            diagnostics.append(
                MapperDiagnostic(
                    candidate.claim_id, candidate.slot_text, candidate.value_text,
                    domain, slot, value, similarity, kept=False, reason="slot_filled",
                )
            )
            continue
        pair = SlotValuePair(domain, slot, value, similarity, candidate.claim_id)
        current = best_pairs.get((domain, slot))
        if current is None or pair.similarity > current.similarity:
            if current is not None:
                diagnostics.append(
                    MapperDiagnostic(
                        current.source_claim, "", current.value,
                        domain, slot, current.value, current.similarity,
                        kept=False, reason="superseded",
                    )
                )
            best_pairs[(domain, slot)] = pair
            diagnostics.append(
                MapperDiagnostic(
                    candidate.claim_id, candidate.slot_text, candidate.value_text,
                    domain, slot, value, similarity, kept=True, reason="kept",
                )
            )
        else:
            diagnostics.append(
                MapperDiagnostic(
                    candidate.claim_id, candidate.slot_text, candidate.value_text,
                    domain, slot, value, similarity, kept=False, reason="duplicate",
                )
            )
    pairs = [best_pairs[key] for key in sorted(best_pairs)]
    return pairs, diagnostics


def enrich(state: DialogueState, pairs: list[SlotValuePair]) -> EnrichedState:
    """Attach augmentations; the merged view fills only base-empty slots."""
    kept: list[SlotValuePair] = []
    for pair in sorted(pairs, key=lambda p: (p.domain, p.slot)):
        if state.slot_value(pair.domain, pair.slot) != EMPTY:
            log.info(
                "augmentation %s.%s=%s ignored: base slot already filled",
                pair.domain, pair.slot, pair.value,
            )
            continue
        kept.append(pair)
    return EnrichedState(base=state, augmentations=tuple(kept))
