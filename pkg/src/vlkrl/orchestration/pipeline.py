"""One dialogue turn of the knowledge pipeline.

propose -> verify (cross-exam, confidence gating, or nothing) -> ground
(rule mapper or prompt-with-retries) -> enrich. Verified pairs accumulate
across turns in a PipelineCarry, and the respondent always sees the
merged view, so already-grounded knowledge is not re-proposed.

Knowledge modes:
  - ``full``: the whole pipeline;
  - ``no_crossexam``: claims skip verification entirely;
  - ``no_t2s``: verified claim texts feed a dense hashed text block in the
    state encoding instead of slot writes;
  - ``rl_only``: no language-model stages at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from vlkrl.core.claims import ConstraintClaim, EnrichedState, SlotValuePair
from vlkrl.core.ontology import Ontology
from vlkrl.core.state import DialogueState
from vlkrl.crossexam.exam import ExamTranscript, examine, propose
from vlkrl.crossexam.gating import GatingConfig, gate_fixed
from vlkrl.gateway.gateway import LlmGateway
from vlkrl.mapper.embedding import EmbeddingProvider
from vlkrl.mapper.mapping import MapperConfig, MapperDiagnostic, map_claims
from vlkrl.mapper.retries import map_with_retries

KNOWLEDGE_MODES = ("full", "no_crossexam", "no_t2s", "rl_only")


@dataclass
class PipelineConfig:
    knowledge: str = "full"
    gating: GatingConfig = field(default_factory=GatingConfig)
    mapper: MapperConfig = field(default_factory=MapperConfig)
    round_limit: int = 5
    text_feature_dim: int = 32

    def __post_init__(self):
        if self.knowledge not in KNOWLEDGE_MODES:
            raise ValueError(f"unknown knowledge mode '{self.knowledge}'")


@dataclass(frozen=True)
class PipelineCarry:
    """Session-lived accumulation of verified knowledge."""

    pairs: tuple[SlotValuePair, ...] = ()
    claim_texts: tuple[str, ...] = ()


@dataclass
class TurnKnowledge:
    """Everything one pipeline turn produced, for traces and encoding."""

    claims: list[ConstraintClaim]
    transcripts: list[ExamTranscript]
    verified: list[ConstraintClaim]
    new_pairs: list[SlotValuePair]
    diagnostics: list[MapperDiagnostic]
    enriched: EnrichedState
    claim_texts: tuple[str, ...]
    retry_attempts: int = 0


class TurnPipeline:
    def __init__(
        self,
        ontology: Ontology,
        config: PipelineConfig,
        gateway: LlmGateway | None = None,
        embedder: EmbeddingProvider | None = None,
    ):
        self.ontology = ontology
        self.config = config
        self.gateway = gateway
        self.embedder = embedder
        if config.knowledge != "rl_only":
            if gateway is None:
                raise ValueError(f"mode '{config.knowledge}' needs a gateway")
            if config.knowledge != "no_t2s" and config.mapper.retry_budget == 0 \
                    and embedder is None:
                raise ValueError("rule-based mapping needs an embedding provider")

    def run_turn(
        self, state: DialogueState, carry: PipelineCarry,
    ) -> tuple[TurnKnowledge, PipelineCarry]:
        if self.config.knowledge == "rl_only":
            return (
                TurnKnowledge([], [], [], [], [], EnrichedState(state, ()), ()),
                carry,
            )

        view = EnrichedState(state, carry.pairs).merged_view()
        claims = propose(self.gateway, view, self.ontology, turn=state.turn)

        gating = self.config.gating
        transcripts: list[ExamTranscript] = []
        if gating.mode == "cross_exam":
            verified, transcripts = examine(
                self.gateway, view, claims, self.config.round_limit
            )
        elif gating.mode in ("fixed", "dynamic"):
            verified = gate_fixed(claims, gating.current_tau)
        else:  # none: pass everything through unverified
            verified = list(claims)

        if self.config.knowledge == "no_t2s":
            texts = carry.claim_texts + tuple(
                c.text for c in verified if c.text not in carry.claim_texts
            )
            knowledge = TurnKnowledge(
                claims, transcripts, verified, [], [],
                EnrichedState(state, carry.pairs), texts,
            )
            return knowledge, replace(carry, claim_texts=texts)

        retry_attempts = 0
        if self.config.mapper.retry_budget > 0:
            new_pairs, diagnostics = [], []
            occupied = {
                (d, s) for d, slots in
                EnrichedState(state, carry.pairs).merged_belief().items()
                for s, v in slots.items() if v != ""
            }
            for claim in sorted(verified, key=lambda c: c.id):
                outcome = map_with_retries(
                    claim, self.config.mapper.retry_budget, self.gateway, self.ontology
                )
                retry_attempts += outcome.attempts
                for pair in outcome.pairs:
                    if (pair.domain, pair.slot) in occupied:
                        continue
                    occupied.add((pair.domain, pair.slot))
                    new_pairs.append(pair)
        else:
            new_pairs, diagnostics = map_claims(
                verified, EnrichedState(state, carry.pairs),
                self.ontology, self.embedder, self.config.mapper,
            )

        all_pairs = carry.pairs + tuple(new_pairs)
        enriched = EnrichedState(state, all_pairs)
        knowledge = TurnKnowledge(
            claims, transcripts, verified, list(new_pairs), diagnostics,
            enriched, carry.claim_texts, retry_attempts,
        )
        return knowledge, replace(carry, pairs=all_pairs)
