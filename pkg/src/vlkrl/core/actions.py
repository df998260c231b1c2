"""System dialogue acts and the finite enumerated action set."""

from __future__ import annotations

from dataclasses import dataclass

from vlkrl.core.ontology import Ontology

# Canonical act-type order; enumeration and action naming follow it.
ACT_TYPES = ("inform", "request", "confirm", "book", "goodbye")


@dataclass(frozen=True, order=True)
class DialogueAct:
    """One atomic act. Field requirements depend on act_type:

    inform/confirm need (domain, slot, value); request needs (domain, slot);
    book needs domain; goodbye stands alone.
    """

    act_type: str
    domain: str = ""
    slot: str = ""
    value: str = ""

    def validate(self) -> None:
        if self.act_type not in ACT_TYPES:
            raise ValueError(f"unknown act type '{self.act_type}'")
        need = {
            "inform": (True, True, True),
            "confirm": (True, True, True),
            "request": (True, True, False),
            "book": (True, False, False),
            "goodbye": (False, False, False),
        }[self.act_type]
        got = (bool(self.domain), bool(self.slot), bool(self.value))
        if got != need:
            raise ValueError(f"malformed {self.act_type} act: {self}")

    def name(self) -> str:
        """Canonical wire name, e.g. ``inform_hotel.area=north``."""
        if self.act_type in ("inform", "confirm"):
            return f"{self.act_type}_{self.domain}.{self.slot}={self.value}"
        if self.act_type == "request":
            return f"request_{self.domain}.{self.slot}"
        if self.act_type == "book":
            return f"book_{self.domain}"
        return "goodbye"

    @staticmethod
    def from_name(name: str) -> "DialogueAct":
        name = name.strip()
        if name == "goodbye":
            return DialogueAct("goodbye")
        if name.startswith("book_"):
            return DialogueAct("book", domain=name[len("book_"):])
        for act_type in ("inform", "confirm"):
            prefix = act_type + "_"
            if name.startswith(prefix):
                ref, _, value = name[len(prefix):].partition("=")
                domain, _, slot = ref.partition(".")
                return DialogueAct(act_type, domain, slot, value)
        if name.startswith("request_"):
            ref = name[len("request_"):]
            domain, _, slot = ref.partition(".")
            return DialogueAct("request", domain, slot)
        raise ValueError(f"unparseable act name '{name}'")


def enumerate_actions(ontology: Ontology) -> list[DialogueAct]:
    """The full finite action set, in a stable canonical order.

    Act types in ACT_TYPES order, then domain, slot, and value
    lexicographic. Pure function of the ontology.
    """
    actions: list[DialogueAct] = []
    domains = sorted(ontology.domains)
    for domain in domains:
        for slot in sorted(ontology.slots_by_domain[domain]):
            for value in sorted(ontology.legal_values(domain, slot)):
                actions.append(DialogueAct("inform", domain, slot, value))
    for domain in domains:
        for slot in sorted(ontology.slots_by_domain[domain]):
            actions.append(DialogueAct("request", domain, slot))
    for domain in domains:
        for slot in sorted(ontology.slots_by_domain[domain]):
            for value in sorted(ontology.legal_values(domain, slot)):
                actions.append(DialogueAct("confirm", domain, slot, value))
    for domain in domains:
        actions.append(DialogueAct("book", domain))
    actions.append(DialogueAct("goodbye"))
    return actions
