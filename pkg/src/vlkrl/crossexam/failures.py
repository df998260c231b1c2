"""Automatic failure-mode classifier for finished dialogues.

T1 flags fabricated content (a system-informed value no database entity
carries), T2 cross-turn inconsistencies (two system turns asserting
different values for the same slot), and T3 constraint violations (a
booking that breaks a goal predicate). Checked in that priority order;
this is an automatic proxy for what would otherwise be a manual audit.
"""

from __future__ import annotations

from vlkrl.core.ontology import Database


def classify_failure(
    system_informs: list[tuple[str, str, str]],
    bookings: dict[str, dict[str, str]],
    database: Database,
    constraint_satisfaction: dict[str, bool],
) -> str:
    """Return "T1", "T2", "T3", or "none".

    ``system_informs`` lists (domain, slot, value) the system asserted, in
    turn order. ``constraint_satisfaction`` maps goal constraint keys to
    whether the final record satisfies them; unsatisfied entries with a
    booking present indicate a violation.
    """
    for domain, slot, value in system_informs:
        entities = database.entities(domain)
        if not any(entity.get(slot) == value for entity in entities):
            return "T1"

    asserted: dict[tuple[str, str], str] = {}
    for domain, slot, value in system_informs:
        previous = asserted.get((domain, slot))
        if previous is not None and previous != value:
            return "T2"
        asserted[(domain, slot)] = value

    if bookings and any(not ok for ok in constraint_satisfaction.values()):
        return "T3"
    return "none"
