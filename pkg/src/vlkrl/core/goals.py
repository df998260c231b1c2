"""User goals: target slot values, requested slots, and checkable constraints."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class ConstraintSpec:
    """One feasibility requirement the final dialogue record must satisfy.

    Explicit constraints are single slot-value equalities the user states
    verbatim. Implicit constraints are instantiated cross-domain rules the
    user never states; they are checked by the rule's predicate against
    the bookings.
    """

    kind: str  # "explicit" | "implicit"
    domain: str
    slot: str
    description: str
    value: str = ""  # explicit: required booked value
    rule_id: str = ""  # implicit: world rule to evaluate
    source_domain: str = ""
    source_slot: str = ""
    source_value: str = ""  # implicit: the goal's value for the rule source

    def key(self) -> str:
        return f"{self.kind}:{self.domain}.{self.slot}:{self.rule_id or self.value}"


@dataclass(frozen=True)
class UserGoal:
    """Sampled per-episode target the simulated user pursues."""

    seed: int
    active_domains: tuple[str, ...]
    constraints: tuple[ConstraintSpec, ...]
    requests: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def explicit_constraints(self) -> list[ConstraintSpec]:
        return [c for c in self.constraints if c.kind == "explicit"]

    def implicit_constraints(self) -> list[ConstraintSpec]:
        return [c for c in self.constraints if c.kind == "implicit"]

    def constraints_for(self, domain: str) -> list[ConstraintSpec]:
        return [c for c in self.constraints if c.domain == domain]

    def requested_pairs(self) -> list[tuple[str, str]]:
        return [
            (domain, slot)
            for domain in sorted(self.requests)
            for slot in self.requests[domain]
        ]
