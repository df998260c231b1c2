"""Dialogue-act metrics and failure attribution.

Act precision/recall/F1 are micro-averaged over turns on canonical act
tuples. Undefined precision (no predictions at all) is scored 0, which
penalizes silent agents. Failure attribution prioritizes implicit over
explicit when both constraint kinds are violated, making the statistic
deterministic under multiple causes.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from vlkrl.core.goals import UserGoal


def act_metrics(
    predicted: Sequence[Iterable], reference: Sequence[Iterable],
) -> tuple[float, float, float]:
    """Micro-averaged (precision, recall, f1) over aligned turn lists."""
    if len(predicted) != len(reference):
        raise ValueError("predicted and reference turn lists must align")
    matched = n_predicted = n_reference = 0
    for pred, ref in zip(predicted, reference):
        pred_set, ref_set = set(pred), set(ref)
        matched += len(pred_set & ref_set)
        n_predicted += len(pred_set)
        n_reference += len(ref_set)
    precision = matched / n_predicted if n_predicted else 0.0
    recall = matched / n_reference if n_reference else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0 else 0.0
    )
    return precision, recall, f1


def attribute_failure(goal: UserGoal, satisfaction: dict[str, bool]) -> str:
    """Classify a failed episode as "implicit", "explicit", or "other".

    A constraint counts against the episode when it was violated or never
    grounded (its satisfaction entry is falsy or missing).
    """
    violated = [
        spec for spec in goal.constraints
        if not satisfaction.get(spec.key(), False)
    ]
    if any(spec.kind == "implicit" for spec in violated):
        return "implicit"
    if any(spec.kind == "explicit" for spec in violated):
        return "explicit"
    return "other"
