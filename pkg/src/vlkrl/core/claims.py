"""Constraint claims, normalized slot-value pairs, and the enriched state."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from vlkrl.core.ontology import EMPTY
from vlkrl.core.state import DialogueState

log = logging.getLogger(__name__)

CLAIM_KINDS = ("explicit", "implicit")


@dataclass(frozen=True)
class ConstraintClaim:
    """A candidate constraint inferred from the dialogue, pre-verification.

    ``hinted_pairs`` carries (slot_ref, value_text) hints when the source
    already pointed at concrete slots; free-text-only claims leave it empty.
    """

    id: str
    text: str
    kind: str
    hinted_pairs: tuple[tuple[str, str], ...] = ()
    confidence: float = 1.0

    def __post_init__(self):
        if self.kind not in CLAIM_KINDS:
            raise ValueError(f"unknown claim kind '{self.kind}'")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class SlotValuePair:
    """A grounded, database-legal augmentation produced by the mapper."""

    domain: str
    slot: str
    value: str
    similarity: float
    source_claim: str

    def __post_init__(self):
        if not 0.0 <= self.similarity <= 1.0:
            raise ValueError(f"similarity {self.similarity} outside [0, 1]")


@dataclass(frozen=True)
class EnrichedState:
    """Base dialogue state plus verified augmentations.

    The merged view fills only slots that are empty in the base state;
    a non-empty base slot always wins.
    """

    base: DialogueState
    augmentations: tuple[SlotValuePair, ...] = ()

    def merged_belief(self) -> dict[str, dict[str, str]]:
        merged = {
            domain: dict(slots) for domain, slots in self.base.belief_state.items()
        }
        for pair in self.augmentations:
            current = merged.get(pair.domain, {}).get(pair.slot, EMPTY)
            if current == EMPTY:
                merged[pair.domain][pair.slot] = pair.value
            elif current != pair.value:
                log.debug(
                    "augmentation %s.%s=%s shadowed by base value %s",
                    pair.domain, pair.slot, pair.value, current,
                )
        return merged

    def merged_view(self) -> DialogueState:
        """The base state with the merged belief substituted in."""
        from dataclasses import replace

        return replace(self.base, belief_state=self.merged_belief())

    def augmented_slots(self) -> set[tuple[str, str]]:
        """Slots the augmentations actually fill (base-empty targets only)."""
        return {
            (p.domain, p.slot)
            for p in self.augmentations
            if self.base.slot_value(p.domain, p.slot) == EMPTY
        }
