"""Fixed-length encoding of the enriched dialogue state.

Layout, in order:
  - one filled bit per (domain, slot) from the base belief;
  - one bit per (domain, slot) filled by a mapper augmentation, so the
    policy can distinguish verified knowledge from user-stated facts
    (the merged view's fill status is the OR of the two groups);
  - one pending-request bit per (domain, slot);
  - one booked bit per domain;
  - database result-count bucket one-hot over (0, 1, 2-5, >5);
  - turn bucket one-hot over (0, 1-2, 3-5, 6-10, 11-20, 21+);
  - optionally, a hashed bag-of-trigrams block for verified claim texts
    (used by the no-slot-writes ablation; zero width otherwise).

Length is a pure function of the ontology (plus the optional text block).
"""

from __future__ import annotations

import zlib

import numpy as np

from vlkrl.core.claims import EnrichedState
from vlkrl.core.ontology import EMPTY, Ontology

DB_BUCKETS = 4
TURN_BUCKETS = 6


def _db_bucket(count: int) -> int:
    if count <= 0:
        return 0
    if count == 1:
        return 1
    if count <= 5:
        return 2
    return 3


def _turn_bucket(turn: int) -> int:
    if turn <= 0:
        return 0
    if turn <= 2:
        return 1
    if turn <= 5:
        return 2
    if turn <= 10:
        return 3
    if turn <= 20:
        return 4
    return 5


class StateEncoder:
    """Encoder bound to one ontology (and one optional text-feature width)."""

    def __init__(self, ontology: Ontology, text_feature_dim: int = 0):
        self.ontology = ontology
        self.slot_pairs = ontology.slot_pairs()
        self.domains = sorted(ontology.domains)
        self.text_feature_dim = text_feature_dim
        self._slot_index = {pair: i for i, pair in enumerate(self.slot_pairs)}
        self._domain_index = {d: i for i, d in enumerate(self.domains)}

    @property
    def dim(self) -> int:
        n = len(self.slot_pairs)
        return 3 * n + len(self.domains) + DB_BUCKETS + TURN_BUCKETS + self.text_feature_dim

    def encode(
        self,
        enriched: EnrichedState,
        db_result_count: int,
        turn: int,
        booked_domains: tuple[str, ...] = (),
        claim_texts: tuple[str, ...] = (),
    ) -> np.ndarray:
        n = len(self.slot_pairs)
        vector = np.zeros(self.dim, dtype=np.float64)
        base = enriched.base
        for (domain, slot), index in self._slot_index.items():
            if base.slot_value(domain, slot) != EMPTY:
                vector[index] = 1.0
        for domain, slot in enriched.augmented_slots():
            vector[n + self._slot_index[(domain, slot)]] = 1.0
        for domain, slots in base.request_state.items():
            for slot in slots:
                index = self._slot_index.get((domain, slot))
                if index is not None:
                    vector[2 * n + index] = 1.0
        offset = 3 * n
        for domain in booked_domains:
            index = self._domain_index.get(domain)
            if index is not None:
                vector[offset + index] = 1.0
        offset += len(self.domains)
        vector[offset + _db_bucket(db_result_count)] = 1.0
        offset += DB_BUCKETS
        vector[offset + _turn_bucket(turn)] = 1.0
        offset += TURN_BUCKETS
        if self.text_feature_dim and claim_texts:
            block = vector[offset:offset + self.text_feature_dim]
            for text in claim_texts:
                padded = f"##{text.lower()}#"
                for i in range(len(padded) - 2):
                    gram = padded[i:i + 3]
                    block[zlib.crc32(gram.encode("utf-8")) % self.text_feature_dim] += 1.0
            norm = np.linalg.norm(block)
            if norm > 0:
                block /= norm
        return vector


def encode_state(
    enriched: EnrichedState,
    ontology: Ontology,
    db_result_count: int,
    turn: int,
    **kwargs,
) -> np.ndarray:
    """One-shot convenience wrapper around StateEncoder."""
    return StateEncoder(ontology).encode(enriched, db_result_count, turn, **kwargs)
