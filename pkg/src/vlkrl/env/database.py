"""Exact-match database lookup."""

from __future__ import annotations

from typing import Mapping

from vlkrl.core.ontology import DONTCARE, EMPTY, Database


def db_query(
    database: Database, domain: str, constraints: Mapping[str, str],
) -> list[dict[str, str]]:
    """Entities of ``domain`` matching every non-empty, non-dontcare
    constraint exactly, in stable entity-id order."""
    results = []
    for entity in database.entities(domain):
        ok = True
        for slot, value in constraints.items():
            if value in (EMPTY, DONTCARE):
                continue
            if entity.get(slot) != value:
                ok = False
                break
        if ok:
            results.append(entity)
    return sorted(results, key=lambda e: e["id"])
