"""Grounding of verified free-text claims into ontology-legal slot-value pairs."""

from vlkrl.mapper.embedding import (
    EmbeddingError,
    RemoteEmbeddingProvider,
    StubEmbeddingProvider,
    TrigramEmbeddingProvider,
    cosine,
)
from vlkrl.mapper.extraction import Candidate, extract
from vlkrl.mapper.mapping import (
    MapperConfig,
    MapperDiagnostic,
    UnknownSlotError,
    enrich,
    map_claims,
    match_slot,
    normalize_value,
)
from vlkrl.mapper.retries import RetryOutcome, map_with_retries

__all__ = [
    "Candidate",
    "EmbeddingError",
    "MapperConfig",
    "MapperDiagnostic",
    "RemoteEmbeddingProvider",
    "RetryOutcome",
    "StubEmbeddingProvider",
    "TrigramEmbeddingProvider",
    "UnknownSlotError",
    "cosine",
    "enrich",
    "extract",
    "map_claims",
    "map_with_retries",
    "match_slot",
    "normalize_value",
]
