"""Shared domain types: ontology, database, dialogue state, claims, actions, goals."""

from vlkrl.core.ontology import (
    DONTCARE,
    EMPTY,
    Database,
    Ontology,
    SchemaError,
    parse_slot_ref,
)
from vlkrl.core.actions import ACT_TYPES, DialogueAct, enumerate_actions
from vlkrl.core.state import (
    DialogueState,
    MalformedStateError,
    deserialize_state,
    empty_state,
    serialize_state,
)
from vlkrl.core.claims import ConstraintClaim, EnrichedState, SlotValuePair
from vlkrl.core.goals import ConstraintSpec, UserGoal

__all__ = [
    "ACT_TYPES",
    "ConstraintClaim",
    "ConstraintSpec",
    "Database",
    "DialogueAct",
    "DialogueState",
    "DONTCARE",
    "EMPTY",
    "EnrichedState",
    "MalformedStateError",
    "Ontology",
    "SchemaError",
    "SlotValuePair",
    "UserGoal",
    "deserialize_state",
    "empty_state",
    "enumerate_actions",
    "parse_slot_ref",
    "serialize_state",
]
