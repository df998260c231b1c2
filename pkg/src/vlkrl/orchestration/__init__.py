"""Per-turn pipeline wiring, episode running, and world-aware test oracles."""

from vlkrl.orchestration.pipeline import PipelineCarry, PipelineConfig, TurnKnowledge, TurnPipeline
from vlkrl.orchestration.episode import EpisodeResult, EnvSession, TurnTrace, run_episode
from vlkrl.orchestration.oracles import (
    EchoRespondentProvider,
    OracleJudgeProvider,
    OraclePolicyProvider,
    OracleRespondentProvider,
    reference_act,
)

__all__ = [
    "EchoRespondentProvider",
    "EnvSession",
    "EpisodeResult",
    "OracleJudgeProvider",
    "OraclePolicyProvider",
    "OracleRespondentProvider",
    "PipelineCarry",
    "PipelineConfig",
    "TurnKnowledge",
    "TurnPipeline",
    "TurnTrace",
    "reference_act",
    "run_episode",
]
