"""Seeded goal sampling over a world.

A goal activates 2-3 domains connected by at least one dependency rule,
derives explicit constraints from a concrete witness entity per domain
(so satisfiability holds by construction and is re-verified against the
database), instantiates implicit constraints from the rules, and picks
one requested slot per domain where one is free.
"""

from __future__ import annotations

import numpy as np

from vlkrl.core.goals import ConstraintSpec, UserGoal
from vlkrl.env.database import db_query
from vlkrl.env.world import Rule, World

MAX_DRAWS = 50


class GoalError(RuntimeError):
    """No satisfiable goal could be drawn within the retry bound."""


def _domain_order(domains: list[str], rules: list[Rule]) -> list[str]:
    """Rule sources before their targets, ties alphabetical."""
    remaining = sorted(domains)
    ordered: list[str] = []
    while remaining:
        for domain in remaining:
            blockers = [
                r for r in rules
                if r.target[0] == domain and r.source[0] in remaining and r.source[0] != domain
            ]
            if not blockers:
                ordered.append(domain)
                remaining.remove(domain)
                break
        else:  # cycle; world validation prevents this
            ordered.extend(remaining)
            break
    return ordered


def _candidate_domain_sets(world: World) -> list[tuple[str, ...]]:
    sets: list[tuple[str, ...]] = []
    linked = {(r.source[0], r.target[0]) for r in world.rules}
    domains = sorted(world.ontology.domains)
    for i, a in enumerate(domains):
        for b in domains[i + 1:]:
            if (a, b) in linked or (b, a) in linked:
                sets.append((a, b))
    if len(domains) >= 3 and linked:
        for i, a in enumerate(domains):
            for j, b in enumerate(domains[i + 1:], start=i + 1):
                for c in domains[j + 1:]:
                    trio = {a, b, c}
                    if any(s in trio and t in trio for s, t in linked):
                        sets.append((a, b, c))
    return sets or [tuple(domains[:2])]


def generate_goal(world: World, seed: int) -> UserGoal:
    rng = np.random.default_rng(seed)
    candidate_sets = _candidate_domain_sets(world)
    for _ in range(MAX_DRAWS):
        goal = _draw(world, rng, candidate_sets, seed)
        if goal is not None:
            return goal
    raise GoalError(f"no satisfiable goal within {MAX_DRAWS} draws (seed {seed})")


def _draw(world, rng, candidate_sets, seed) -> UserGoal | None:
    active = candidate_sets[int(rng.integers(len(candidate_sets)))]
    rules = [
        r for r in world.rules
        if r.source[0] in active and r.target[0] in active
    ]
    # one rule per target slot
    by_target: dict[tuple[str, str], list[Rule]] = {}
    for rule in rules:
        by_target.setdefault(rule.target, []).append(rule)
    chosen_rules: list[Rule] = []
    for target in sorted(by_target):
        options = sorted(by_target[target], key=lambda r: r.id)
        chosen_rules.append(options[int(rng.integers(len(options)))])

    ordered = _domain_order(list(active), chosen_rules)
    explicit_values: dict[tuple[str, str], str] = {}
    constraints: list[ConstraintSpec] = []
    requests: dict[str, tuple[str, ...]] = {}

    for domain in ordered:
        slots = sorted(world.ontology.slots_by_domain[domain])
        implicit_here = [r for r in chosen_rules if r.target[0] == domain]
        implicit_slots = {r.target[1] for r in implicit_here}
        source_slots = {
            r.source[1] for r in chosen_rules if r.source[0] == domain
        }

        # entities must satisfy the canonical fill of every implicit rule
        filters: dict[str, str] = {}
        for rule in implicit_here:
            source_value = explicit_values.get(rule.source)
            if source_value is None:
                return None  # source domain drew no value; re-draw
            filters[rule.target[1]] = rule.fill_value(source_value)
        entities = db_query(world.database, domain, filters)
        if not entities:
            return None
        entity = entities[int(rng.integers(len(entities)))]

        # explicit slots: every rule source, plus one free slot
        explicit_slots = sorted(source_slots)
        free = [s for s in slots if s not in implicit_slots and s not in explicit_slots]
        if free:
            pick = free[int(rng.integers(len(free)))]
            explicit_slots.append(pick)
            free.remove(pick)
        if not explicit_slots:
            return None
        for slot in explicit_slots:
            explicit_values[(domain, slot)] = entity[slot]
            constraints.append(
                ConstraintSpec(
                    kind="explicit",
                    domain=domain,
                    slot=slot,
                    description=f"{domain} {slot} must be {entity[slot]}",
                    value=entity[slot],
                )
            )
        for rule in implicit_here:
            source_value = explicit_values[rule.source]
            constraints.append(
                ConstraintSpec(
                    kind="implicit",
                    domain=domain,
                    slot=rule.target[1],
                    description=rule.description,
                    rule_id=rule.id,
                    source_domain=rule.source[0],
                    source_slot=rule.source[1],
                    source_value=source_value,
                )
            )
        if free:
            requests[domain] = (free[int(rng.integers(len(free)))],)

    # generation-time satisfiability audit against the database
    for domain in ordered:
        wanted = {
            c.slot: c.value for c in constraints
            if c.domain == domain and c.kind == "explicit"
        }
        for c in constraints:
            if c.domain == domain and c.kind == "implicit":
                rule = world.rule_by_id(c.rule_id)
                wanted[c.slot] = rule.fill_value(c.source_value)
        if not db_query(world.database, domain, wanted):
            return None
    return UserGoal(
        seed=seed,
        active_domains=tuple(ordered),
        constraints=tuple(constraints),
        requests=requests,
    )
