"""Ontology and database schema for multi-domain task-oriented worlds.

Slot names are namespaced as ``domain.slot`` internally; flat spellings
like ``hotel_area`` are accepted at I/O boundaries and resolved here.
"""

from __future__ import annotations

from dataclasses import dataclass

# Unfilled slot sentinel. Legal value sets never contain it, so "" in a
# wire form unambiguously means "empty".
EMPTY = ""

# The user explicitly has no preference; distinct from EMPTY and never a
# legal ontology value. Database queries skip dontcare constraints.
DONTCARE = "dontcare"


class SchemaError(ValueError):
    """An ontology or database violates its structural invariants."""


@dataclass(frozen=True)
class Ontology:
    """Domains, their slots, and the finite legal value set per slot.

    Immutable value object; share freely across threads.
    """

    domains: tuple[str, ...]
    slots_by_domain: dict[str, tuple[str, ...]]
    values_by_slot: dict[tuple[str, str], tuple[str, ...]]

    def validate(self) -> None:
        if len(set(self.domains)) != len(self.domains):
            raise SchemaError("duplicate domain names")
        for domain in self.domains:
            slots = self.slots_by_domain.get(domain)
            if not slots:
                raise SchemaError(f"domain '{domain}' declares no slots")
            if len(set(slots)) != len(slots):
                raise SchemaError(f"duplicate slot names in domain '{domain}'")
            for slot in slots:
                values = self.values_by_slot.get((domain, slot), ())
                if not values:
                    raise SchemaError(f"empty value set for '{domain}.{slot}'")
                if len(set(values)) != len(values):
                    raise SchemaError(f"duplicate values for '{domain}.{slot}'")
                for value in values:
                    if value in (EMPTY, DONTCARE):
                        raise SchemaError(
                            f"reserved value {value!r} in '{domain}.{slot}'"
                        )
        for domain in self.slots_by_domain:
            if domain not in self.domains:
                raise SchemaError(f"slots declared for unknown domain '{domain}'")
        for domain, slot in self.values_by_slot:
            if not self.has_slot(domain, slot):
                raise SchemaError(f"values declared for unknown slot '{domain}.{slot}'")

    def has_slot(self, domain: str, slot: str) -> bool:
        return domain in self.slots_by_domain and slot in self.slots_by_domain[domain]

    def legal_values(self, domain: str, slot: str) -> tuple[str, ...]:
        try:
            return self.values_by_slot[(domain, slot)]
        except KeyError:
            raise SchemaError(f"unknown slot '{domain}.{slot}'") from None

    def slot_pairs(self) -> list[tuple[str, str]]:
        """All (domain, slot) pairs, domain then slot lexicographic."""
        pairs = []
        for domain in sorted(self.domains):
            for slot in sorted(self.slots_by_domain[domain]):
                pairs.append((domain, slot))
        return pairs

    @staticmethod
    def qualified(domain: str, slot: str) -> str:
        return f"{domain}.{slot}"


@dataclass(frozen=True)
class Database:
    """Populated instance of an ontology: one entity table per domain.

    Every entity record carries an ``id`` plus a value for each of its
    domain's slots.
    """

    entities_by_domain: dict[str, tuple[dict[str, str], ...]]

    def validate(self, ontology: Ontology) -> None:
        for domain, entities in self.entities_by_domain.items():
            if domain not in ontology.domains:
                raise SchemaError(f"entities for unknown domain '{domain}'")
            seen_ids: set[str] = set()
            for entity in entities:
                eid = entity.get("id")
                if not eid:
                    raise SchemaError(f"entity without id in domain '{domain}'")
                if eid in seen_ids:
                    raise SchemaError(f"duplicate entity id '{eid}' in '{domain}'")
                seen_ids.add(eid)
                for slot in ontology.slots_by_domain[domain]:
                    value = entity.get(slot)
                    if value is None:
                        raise SchemaError(f"entity '{eid}' missing slot '{slot}'")
                    if value not in ontology.legal_values(domain, slot):
                        raise SchemaError(
                            f"entity '{eid}' has illegal value '{value}' "
                            f"for '{domain}.{slot}'"
                        )

    def entities(self, domain: str) -> tuple[dict[str, str], ...]:
        return self.entities_by_domain.get(domain, ())


def parse_slot_ref(text: str, ontology: Ontology) -> tuple[str, str] | None:
    """Resolve a slot reference to (domain, slot), or None if it is not exact.

    Accepts ``domain.slot``, the flat ``domain_slot`` spelling, and a bare
    slot name when it is unambiguous across domains.
    """
    ref = text.strip().lower()
    if "." in ref:
        domain, _, slot = ref.partition(".")
        if ontology.has_slot(domain, slot):
            return domain, slot
        return None
    if "_" in ref:
        # Flat spelling: the domain is everything before the first "_"
        # that names a real domain (slot names may themselves contain "_").
        head, _, tail = ref.partition("_")
        if head in ontology.domains and ontology.has_slot(head, tail):
            return head, tail
    matches = [
        (domain, slot)
        for domain, slot in ontology.slot_pairs()
        if slot == ref
    ]
    if len(matches) == 1:
        return matches[0]
    return None
