"""Claim proposal and the bounded judge/respondent examination loop.

Each claim is examined independently: the judge asks clarification
questions, the respondent answers, and after at most ``round_limit``
rounds the judge renders a one-line True/False verdict. Contradictions,
evasions, and unparseable verdicts all reject the claim (fail closed).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from vlkrl.core.claims import ConstraintClaim
from vlkrl.core.ontology import Ontology
from vlkrl.core.state import DialogueState
from vlkrl.gateway.gateway import LlmGateway
from vlkrl.gateway.parsing import (
    derive_claims,
    parse_respondent_output,
    parse_verdict_line,
)
from vlkrl.gateway.prompts import (
    STOP_TOKEN,
    render_judge_question_prompt,
    render_judge_verdict_prompt,
    render_respondent_answer_prompt,
    render_respondent_prompt,
)

log = logging.getLogger(__name__)

DEFAULT_ROUND_LIMIT = 5


@dataclass(frozen=True)
class ExamTranscript:
    """Record of one claim's examination."""

    claim_id: str
    rounds: tuple[tuple[str, str], ...]
    verdict: str  # "accepted" | "rejected"
    rounds_used: int
    verdict_raw: str = ""

    def __post_init__(self):
        if self.verdict not in ("accepted", "rejected"):
            raise ValueError(f"unknown verdict '{self.verdict}'")


def propose(
    gateway: LlmGateway, state: DialogueState, ontology: Ontology, turn: int = 0,
) -> list[ConstraintClaim]:
    """Ask the respondent for candidate constraints over the current state.

    Parse failures degrade to an empty claim set with a logged warning;
    transport errors propagate.
    """
    raw = gateway.complete("respondent", render_respondent_prompt(state))
    try:
        output_state, confidence = parse_respondent_output(raw, state, ontology)
    except ValueError as exc:
        log.warning("respondent output rejected: %s", exc)
        return []
    return derive_claims(state, output_state, confidence, ontology, turn=turn)


def examine(
    gateway: LlmGateway,
    state: DialogueState,
    claims: list[ConstraintClaim],
    round_limit: int = DEFAULT_ROUND_LIMIT,
) -> tuple[list[ConstraintClaim], list[ExamTranscript]]:
    """Cross-examine each claim; keep those the judge endorses.

    Results are merged in claim-id order, so concurrent per-claim
    examination would be observationally identical.
    """
    verified: list[ConstraintClaim] = []
    transcripts: list[ExamTranscript] = []
    for claim in sorted(claims, key=lambda c: c.id):
        rounds: list[tuple[str, str]] = []
        for _ in range(round_limit):
            question = gateway.complete(
                "judge", render_judge_question_prompt(state, claim, rounds)
            ).strip()
            if question == STOP_TOKEN:
                break
            answer = gateway.complete(
                "respondent",
                render_respondent_answer_prompt(state, claim, rounds, question),
            ).strip()
            rounds.append((question, answer))
        verdict_raw = gateway.complete(
            "judge", render_judge_verdict_prompt(state, claim, rounds)
        )
        decision = parse_verdict_line(verdict_raw, claim.id)
        if decision is None:
            log.warning("unparseable verdict for %s; rejecting", claim.id)
            accepted = False
        else:
            accepted = decision
        if accepted:
            verified.append(claim)
        transcripts.append(
            ExamTranscript(
                claim_id=claim.id,
                rounds=tuple(rounds),
                verdict="accepted" if accepted else "rejected",
                rounds_used=len(rounds),
                verdict_raw=verdict_raw.strip(),
            )
        )
    return verified, transcripts
