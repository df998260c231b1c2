"""Confidence-based gating: the fixed-threshold and dynamic alternatives
to full cross-examination."""

from __future__ import annotations

from dataclasses import dataclass

from vlkrl.core.claims import ConstraintClaim

GATING_MODES = ("cross_exam", "fixed", "dynamic", "none")


@dataclass
class GatingConfig:
    """How claims are filtered before mapping.

    ``cross_exam`` runs the full judge loop; ``fixed``/``dynamic`` keep
    claims whose self-reported confidence strictly exceeds the current
    threshold; ``none`` passes everything through.
    """

    mode: str = "cross_exam"
    tau0: float = 0.85
    alpha: float = 0.1
    f1_threshold: float = 0.70
    warmup_epochs: int = 50
    current_tau: float = 0.85

    def __post_init__(self):
        if self.mode not in GATING_MODES:
            raise ValueError(f"unknown gating mode '{self.mode}'")
        for name in ("tau0", "current_tau"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} outside [0, 1]")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")


def gate_fixed(claims: list[ConstraintClaim], threshold: float) -> list[ConstraintClaim]:
    """Keep claims whose confidence strictly exceeds the threshold."""
    return [claim for claim in claims if claim.confidence > threshold]


def gate_dynamic_update(config: GatingConfig, epoch: int, validation_f1: float) -> float:
    """Threshold for the next epoch.

    During warmup the threshold stays at tau0; afterwards it rises with
    validation F1 above the target, clamped to [0, 1].
    """
    if epoch < config.warmup_epochs:
        tau = config.tau0
    else:
        tau = config.tau0 + config.alpha * max(0.0, validation_f1 - config.f1_threshold)
    return min(1.0, max(0.0, tau))
