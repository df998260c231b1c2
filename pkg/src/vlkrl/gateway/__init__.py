"""Role-conditioned chat-completion client plus scripted test providers."""

from vlkrl.gateway.providers import (
    CallableProvider,
    HttpChatProvider,
    ProviderError,
    ProviderRefusalError,
    ScriptedProvider,
    TranscriptMismatchError,
    TransportError,
)
from vlkrl.gateway.gateway import ChatExchange, LlmGateway, RoleConfig
from vlkrl.gateway.parsing import (
    ConfidenceRangeError,
    OutputFormatError,
    ProtectedFieldError,
    derive_claims,
    parse_action_reply,
    parse_respondent_output,
    parse_verdict_line,
)
from vlkrl.gateway.prompts import (
    STOP_TOKEN,
    render_action_prompt,
    render_judge_question_prompt,
    render_judge_verdict_prompt,
    render_respondent_answer_prompt,
    render_respondent_prompt,
)

__all__ = [
    "CallableProvider",
    "ChatExchange",
    "ConfidenceRangeError",
    "HttpChatProvider",
    "LlmGateway",
    "OutputFormatError",
    "ProtectedFieldError",
    "ProviderError",
    "ProviderRefusalError",
    "RoleConfig",
    "STOP_TOKEN",
    "ScriptedProvider",
    "TranscriptMismatchError",
    "TransportError",
    "derive_claims",
    "parse_action_reply",
    "parse_respondent_output",
    "parse_verdict_line",
    "render_action_prompt",
    "render_judge_question_prompt",
    "render_judge_verdict_prompt",
    "render_respondent_answer_prompt",
    "render_respondent_prompt",
]
