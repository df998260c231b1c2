"""Role-conditioned gateway over a chat provider, with full exchange logging."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from vlkrl.gateway.providers import ChatProvider, ProviderRefusalError

log = logging.getLogger(__name__)

ROLES = ("respondent", "judge", "policy")


@dataclass(frozen=True)
class RoleConfig:
    """Backbone and sampling settings for one pipeline role.

    Respondent and judge backbones are independently configurable and may
    name different models.
    """

    role: str
    backbone_id: str = "scripted"
    prompt_template_id: str = "default-v1"
    temperature: float = 0.0
    max_tokens: int = 1024

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role '{self.role}'")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")


@dataclass
class ChatExchange:
    """One logged request/response round trip."""

    role: str
    messages: list[tuple[str, str]]
    response: str
    latency_s: float
    prompt_tokens: int
    completion_tokens: int


def _rough_tokens(text: str) -> int:
    return max(1, len(text) // 4)


@dataclass
class LlmGateway:
    """Dispatches role-tagged completions and keeps an append-only log.

    One gateway may serve many sessions; within a session calls are
    sequential, so the log is single-writer.
    """

    provider: ChatProvider
    roles: dict[str, RoleConfig] = field(default_factory=dict)
    exchanges: list[ChatExchange] = field(default_factory=list)

    def configure(self, config: RoleConfig) -> None:
        self.roles[config.role] = config

    def config_for(self, role: str) -> RoleConfig:
        if role not in self.roles:
            self.configure(RoleConfig(role=role))
        return self.roles[role]

    def complete(self, role: str, messages: list[tuple[str, str]]) -> str:
        config = self.config_for(role)
        started = time.perf_counter()
        text = self.provider.complete(
            role, config.backbone_id, messages, config.temperature, config.max_tokens
        )
        if text is None or text == "":
            raise ProviderRefusalError(f"empty completion for role '{role}'")
        prompt_text = "\n".join(t for _, t in messages)
        self.exchanges.append(
            ChatExchange(
                role=role,
                messages=list(messages),
                response=text,
                latency_s=time.perf_counter() - started,
                prompt_tokens=_rough_tokens(prompt_text),
                completion_tokens=_rough_tokens(text),
            )
        )
        return text

    @property
    def call_count(self) -> int:
        return len(self.exchanges)
