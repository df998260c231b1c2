"""Prompt rendering from the versioned template assets.

Templates use ``[[TOKEN]]`` placeholders (plain ``str.replace``, so JSON
braces in state text never collide with formatting). Rendering is
deterministic: identical inputs produce byte-identical prompts.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from vlkrl.core.claims import ConstraintClaim
from vlkrl.core.state import DialogueState, serialize_state

# Literal stop token the judge emits when it has no further questions.
STOP_TOKEN = "NO_FURTHER_QUESTIONS"

Messages = list[tuple[str, str]]


@lru_cache(maxsize=None)
def _template(name: str) -> str:
    ref = resources.files("vlkrl.gateway.templates").joinpath(f"{name}.txt")
    return ref.read_text(encoding="utf-8").rstrip("\n")


def _claim_block(claim: ConstraintClaim) -> dict[str, str]:
    if claim.hinted_pairs:
        slot, value = claim.hinted_pairs[0]
    else:
        slot, value = "?", "?"
    return {
        "[[CLAIM_ID]]": claim.id,
        "[[KIND]]": claim.kind,
        "[[SLOT]]": slot,
        "[[VALUE]]": value,
        "[[TEXT]]": claim.text,
    }


def _rounds_block(rounds: list[tuple[str, str]]) -> str:
    if not rounds:
        return "ROUNDS: none yet."
    lines = ["ROUNDS:"]
    for i, (question, answer) in enumerate(rounds, start=1):
        lines.append(f"Q{i}: {question}")
        lines.append(f"A{i}: {answer}")
    return "\n".join(lines)


def _fill(template_name: str, mapping: dict[str, str]) -> str:
    text = _template(template_name)
    for token, value in mapping.items():
        text = text.replace(token, value)
    return text


def render_respondent_prompt(state: DialogueState) -> Messages:
    """Constraint-inference prompt: system role, worked examples, the
    instruction block, and the serialized state in the question template."""
    question = _fill("respondent_question", {"[[STATE]]": serialize_state(state)})
    user_text = "\n\n".join(
        [_template("respondent_examples"), _template("respondent_instructions"), question]
    )
    return [("system", _template("respondent_system")), ("user", user_text)]


def render_respondent_answer_prompt(
    state: DialogueState, claim: ConstraintClaim,
    rounds: list[tuple[str, str]], question: str,
) -> Messages:
    mapping = {"[[STATE]]": serialize_state(state), "[[ROUNDS]]": _rounds_block(rounds),
               "[[QUESTION]]": question}
    mapping.update(_claim_block(claim))
    return [("system", _template("respondent_system")),
            ("user", _fill("respondent_answer", mapping))]


def render_judge_question_prompt(
    state: DialogueState, claim: ConstraintClaim, rounds: list[tuple[str, str]],
) -> Messages:
    mapping = {"[[STATE]]": serialize_state(state), "[[ROUNDS]]": _rounds_block(rounds)}
    mapping.update(_claim_block(claim))
    return [("system", _template("judge_system")),
            ("user", _fill("judge_question", mapping))]


def render_judge_verdict_prompt(
    state: DialogueState, claim: ConstraintClaim, rounds: list[tuple[str, str]],
) -> Messages:
    mapping = {"[[STATE]]": serialize_state(state), "[[ROUNDS]]": _rounds_block(rounds)}
    mapping.update(_claim_block(claim))
    return [("system", _template("judge_system")),
            ("user", _fill("judge_verdict", mapping))]


def render_action_prompt(
    action_names: list[str], history: tuple[tuple[str, str], ...],
    db_results: list[dict[str, str]],
) -> Messages:
    history_lines = [f"{speaker}: {text}" for speaker, text in history] or ["(empty)"]
    db_lines = []
    for entity in db_results:
        fields = ", ".join(f"{k}={v}" for k, v in sorted(entity.items()))
        db_lines.append(f"- {fields}")
    if not db_lines:
        db_lines = ["(no matching entries)"]
    mapping = {
        "[[ACTIONS]]": "{ " + ", ".join(action_names) + " }",
        "[[HISTORY]]": "\n".join(history_lines),
        "[[DB_RESULTS]]": "\n".join(db_lines),
    }
    return [("system", _template("policy_system")),
            ("user", _fill("policy_question", mapping))]
