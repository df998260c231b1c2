"""Dual-role claim verification and the confidence-gating alternatives."""

from vlkrl.crossexam.exam import ExamTranscript, examine, propose
from vlkrl.crossexam.gating import GatingConfig, gate_dynamic_update, gate_fixed
from vlkrl.crossexam.failures import classify_failure

__all__ = [
    "ExamTranscript",
    "GatingConfig",
    "classify_failure",
    "examine",
    "gate_dynamic_update",
    "gate_fixed",
    "propose",
]
