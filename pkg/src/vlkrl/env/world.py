"""World definition: ontology + database + cross-domain dependency rules.

Worlds load from a JSON file (see the README for the documented format and
``vlkrl world validate`` for the checker). Dependency rules are the
executable form of implicit constraints: each maps a source slot's value
to a requirement on a target slot in another domain.

Rule kinds:
  - ``identity``: target value must equal the source value;
  - ``value_map``: target value must equal ``map[source value]``;
  - ``at_or_after``: target value must not precede the source value under
    the rule's total order (the canonical fill is the source value itself).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from vlkrl.core.ontology import Database, Ontology, SchemaError

RULE_KINDS = ("identity", "value_map", "at_or_after")


@dataclass(frozen=True)
class Rule:
    id: str
    kind: str
    source: tuple[str, str]
    target: tuple[str, str]
    description: str
    value_map: dict[str, str] | None = None
    order: tuple[str, ...] = ()
    deflection: str = ""
    # source value -> canonical legal target value; resolved at load time
    fill_map: dict[str, str] | None = None

    def fill_value(self, source_value: str) -> str:
        """The canonical target value an oracle would derive."""
        if self.fill_map is not None and source_value in self.fill_map:
            return self.fill_map[source_value]
        if self.kind == "value_map":
            return self.value_map[source_value]
        return source_value

    def satisfied(self, target_value: str, source_value: str) -> bool:
        if self.kind == "identity":
            return target_value == source_value
        if self.kind == "value_map":
            return target_value == self.value_map.get(source_value)
        position = {value: i for i, value in enumerate(self.order)}
        if target_value not in position or source_value not in position:
            return False
        return position[target_value] >= position[source_value]


@dataclass(frozen=True)
class World:
    name: str
    ontology: Ontology
    database: Database
    rules: tuple[Rule, ...]

    def rule_by_id(self, rule_id: str) -> Rule:
        for rule in self.rules:
            if rule.id == rule_id:
                return rule
        raise KeyError(f"unknown rule '{rule_id}'")

    def rules_targeting(self, domain: str) -> list[Rule]:
        return [rule for rule in self.rules if rule.target[0] == domain]


def validate_world(world: World) -> None:
    """Check every structural invariant; raises SchemaError with a diagnostic."""
    world.ontology.validate()
    world.database.validate(world.ontology)
    seen_rule_ids: set[str] = set()
    edges: list[tuple[str, str]] = []
    for rule in world.rules:
        if rule.id in seen_rule_ids:
            raise SchemaError(f"duplicate rule id '{rule.id}'")
        seen_rule_ids.add(rule.id)
        if rule.kind not in RULE_KINDS:
            raise SchemaError(f"rule '{rule.id}' has unknown kind '{rule.kind}'")
        for label, (domain, slot) in (("source", rule.source), ("target", rule.target)):
            if not world.ontology.has_slot(domain, slot):
                raise SchemaError(f"rule '{rule.id}' {label} names unknown slot "
                                  f"'{domain}.{slot}'")
        source_values = world.ontology.legal_values(*rule.source)
        target_values = world.ontology.legal_values(*rule.target)
        if rule.kind == "value_map":
            if not rule.value_map:
                raise SchemaError(f"rule '{rule.id}' missing its value map")
        elif rule.kind == "at_or_after":
            if not rule.order:
                raise SchemaError(f"rule '{rule.id}' missing its value order")
            for value in source_values:
                if value not in rule.order:
                    raise SchemaError(f"rule '{rule.id}' order misses '{value}'")
            for value in target_values:
                if value not in rule.order:
                    raise SchemaError(f"rule '{rule.id}' order misses '{value}'")
        # every source value must resolve to a legal target value
        for value in source_values:
            try:
                fill = rule.fill_value(value)
            except KeyError:
                fill = None
            if fill not in target_values:
                raise SchemaError(
                    f"rule '{rule.id}' maps source value '{value}' to "
                    f"'{fill}', which is not legal for the target slot"
                )
        edges.append((rule.source[0], rule.target[0]))
        if rule.source[0] == rule.target[0]:
            raise SchemaError(f"rule '{rule.id}' is not cross-domain")
    _check_acyclic(edges)


def _check_acyclic(edges: list[tuple[str, str]]) -> None:
    adjacency: dict[str, set[str]] = {}
    for src, dst in edges:
        adjacency.setdefault(src, set()).add(dst)
    visiting: set[str] = set()
    settled: set[str] = set()

    def visit(node: str) -> None:
        if node in settled:
            return
        if node in visiting:
            raise SchemaError(f"dependency rules form a cycle through '{node}'")
        visiting.add(node)
        for successor in adjacency.get(node, ()):
            visit(successor)
        visiting.discard(node)
        settled.add(node)

    for node in list(adjacency):
        visit(node)


def _with_fill_map(rule: Rule, ontology: Ontology) -> Rule:
    """Resolve the canonical source -> target value map for a rule.

    For at_or_after rules the canonical fill is the earliest legal target
    value not preceding the source in the rule's order.
    """
    try:
        source_values = ontology.legal_values(*rule.source)
        target_values = ontology.legal_values(*rule.target)
    except SchemaError:
        return rule  # validate_world reports the unknown slot
    fill_map: dict[str, str] = {}
    for value in source_values:
        if rule.kind == "identity":
            fill = value
        elif rule.kind == "value_map":
            fill = (rule.value_map or {}).get(value)
        else:  # at_or_after
            position = {v: i for i, v in enumerate(rule.order)}
            candidates = [
                t for t in target_values
                if t in position and value in position and position[t] >= position[value]
            ]
            fill = min(candidates, key=lambda t: position[t]) if candidates else None
        if fill in target_values:
            fill_map[value] = fill
    from dataclasses import replace

    return replace(rule, fill_map=fill_map)


def world_from_dict(payload: dict) -> World:
    try:
        name = payload["name"]
        domains_raw = payload["domains"]
    except KeyError as exc:
        raise SchemaError(f"world file missing field {exc}") from None
    domains = tuple(sorted(domains_raw))
    slots_by_domain = {}
    values_by_slot = {}
    for domain in domains:
        slots = domains_raw[domain].get("slots", {})
        slots_by_domain[domain] = tuple(sorted(slots))
        for slot, values in slots.items():
            values_by_slot[(domain, slot)] = tuple(values)
    ontology = Ontology(domains, slots_by_domain, values_by_slot)
    entities = {
        domain: tuple(dict(e) for e in payload.get("entities", {}).get(domain, []))
        for domain in domains
    }
    database = Database(entities)
    rules = []
    for raw in payload.get("rules", []):
        rule = Rule(
            id=raw["id"],
            kind=raw["kind"],
            source=tuple(raw["source"]),
            target=tuple(raw["target"]),
            description=raw.get("description", ""),
            value_map=raw.get("value_map"),
            order=tuple(raw.get("order", ())),
            deflection=raw.get("deflection", ""),
        )
        rules.append(_with_fill_map(rule, ontology))
    world = World(name=name, ontology=ontology, database=database, rules=tuple(rules))
    validate_world(world)
    return world


def load_world(path: str | Path) -> World:
    with open(path, encoding="utf-8") as fh:
        return world_from_dict(json.load(fh))


def default_world() -> World:
    ref = resources.files("vlkrl.env.worlds").joinpath("default.json")
    return world_from_dict(json.loads(ref.read_text(encoding="utf-8")))


def resolve_world(spec: str) -> World:
    """CLI helper: "default" or a path to a world JSON file."""
    if spec == "default":
        return default_world()
    return load_world(spec)
