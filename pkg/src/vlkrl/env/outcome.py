"""Outcome judging for finished dialogues.

Complete: every requested slot was answered. Success (the all_domains
outcome): complete, and every goal constraint predicate holds on the
bookings. A domain counts as satisfied when it is booked, all its
constraints hold, and its own requests were answered. Early termination
is always a failure.
"""

from __future__ import annotations

from dataclasses import dataclass

from vlkrl.core.goals import UserGoal
from vlkrl.env.world import World

OUTCOME_ALL = "all_domains"
OUTCOME_SINGLE = "single_domain"
OUTCOME_FAILURE = "failure"


@dataclass(frozen=True)
class Outcome:
    label: str
    satisfied_domains: tuple[str, ...]
    constraint_satisfaction: dict[str, bool]
    complete: bool
    success: bool
    terminated_early: bool


def constraint_satisfied(
    spec, world: World, bookings: dict[str, dict[str, str]],
) -> bool:
    booking = bookings.get(spec.domain)
    if booking is None:
        return False
    if spec.kind == "explicit":
        return booking.get(spec.slot) == spec.value
    rule = world.rule_by_id(spec.rule_id)
    return rule.satisfied(booking.get(spec.slot, ""), spec.source_value)


def judge_outcome(
    goal: UserGoal,
    world: World,
    bookings: dict[str, dict[str, str]],
    answered: set[tuple[str, str]],
    terminated_early: bool,
) -> Outcome:
    satisfaction = {
        spec.key(): constraint_satisfied(spec, world, bookings)
        for spec in goal.constraints
    }
    complete = all(pair in answered for pair in goal.requested_pairs())

    satisfied_domains = []
    for domain in goal.active_domains:
        if domain not in bookings:
            continue
        if not all(
            satisfaction[spec.key()] for spec in goal.constraints_for(domain)
        ):
            continue
        if not all(
            (domain, slot) in answered for slot in goal.requests.get(domain, ())
        ):
            continue
        satisfied_domains.append(domain)

    success = (
        complete
        and not terminated_early
        and len(satisfied_domains) == len(goal.active_domains)
    )
    if terminated_early:
        label = OUTCOME_FAILURE
    elif success:
        label = OUTCOME_ALL
    elif satisfied_domains:
        label = OUTCOME_SINGLE
    else:
        label = OUTCOME_FAILURE
    return Outcome(
        label=label,
        satisfied_domains=tuple(satisfied_domains),
        constraint_satisfaction=satisfaction,
        complete=complete,
        success=success,
        terminated_early=terminated_early,
    )
