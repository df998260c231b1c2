"""Prompted action selection for the no-RL mode.

The model sees the action set, dialogue history, and database results,
and must answer ``Action = <name>``. An unknown name earns one corrective
retry; if that also fails, the fallback is a request for the first empty
slot (or goodbye when nothing is empty).
"""

from __future__ import annotations

import logging

from vlkrl.core.actions import DialogueAct
from vlkrl.core.claims import EnrichedState
from vlkrl.core.ontology import EMPTY, Ontology
from vlkrl.gateway.gateway import LlmGateway
from vlkrl.gateway.parsing import OutputFormatError, parse_action_reply
from vlkrl.gateway.prompts import render_action_prompt

log = logging.getLogger(__name__)

RETRY_SUFFIX = (
    "Your previous answer was not a valid action name. Answer again with "
    "exactly one action name from the action set, in the form "
    "Action = [action name]."
)


def _fallback_action(enriched: EnrichedState, ontology: Ontology) -> DialogueAct:
    belief = enriched.merged_belief()
    for domain, slot in ontology.slot_pairs():
        if belief.get(domain, {}).get(slot, EMPTY) == EMPTY:
            return DialogueAct("request", domain, slot)
    return DialogueAct("goodbye")


def llm_only_policy(
    gateway: LlmGateway,
    actions: list[DialogueAct],
    enriched: EnrichedState,
    db_results: list[dict[str, str]],
    ontology: Ontology,
) -> DialogueAct:
    by_name = {action.name(): action for action in actions}
    messages = render_action_prompt(
        sorted(by_name), enriched.base.history, db_results
    )
    for attempt in range(2):
        raw = gateway.complete("policy", messages)
        try:
            name = parse_action_reply(raw)
        except OutputFormatError:
            name = ""
        action = by_name.get(name)
        if action is not None:
            return action
        log.info("policy reply %r is not a known action (attempt %d)", name, attempt + 1)
        messages = messages + [("assistant", raw), ("user", RETRY_SUFFIX)]
    fallback = _fallback_action(enriched, ontology)
    log.warning("falling back to %s after two unparseable action replies", fallback.name())
    return fallback
