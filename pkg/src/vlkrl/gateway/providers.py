"""Chat-completion providers: live HTTP, scripted replay, and callables.

The wire protocol is the generic chat-completion shape: a model id plus a
list of role-tagged messages, returning one text completion. Providers
also receive the pipeline role ("respondent", "judge", "policy") so test
doubles can key their scripts on it; live providers ignore it.
"""

from __future__ import annotations

import logging
import os
import time
from typing import Callable, Protocol

log = logging.getLogger(__name__)

BASE_URL_ENV = "VLKRL_API_BASE"
API_KEY_ENV = "VLKRL_API_KEY"


class ProviderError(RuntimeError):
    """Base class for provider failures."""


class TransportError(ProviderError):
    """The provider was unreachable or returned a transport-level failure."""


class ProviderRefusalError(ProviderError):
    """The provider answered but produced no usable completion."""


class TranscriptMismatchError(ProviderError):
    """A scripted provider was asked something its transcript does not cover."""


class ChatProvider(Protocol):
    def complete(self, role: str, model: str, messages: list[tuple[str, str]],
                 temperature: float, max_tokens: int) -> str: ...


class HttpChatProvider:
    """Minimal client for a chat-completion HTTP endpoint.

    Base URL and API key come from constructor arguments or the
    VLKRL_API_BASE / VLKRL_API_KEY environment variables. Transient
    transport failures are retried ``retries`` times before surfacing.
    """

    def __init__(self, base_url: str | None = None, api_key: str | None = None,
                 retries: int = 3, timeout: float = 60.0):
        self.base_url = (base_url or os.environ.get(BASE_URL_ENV, "")).rstrip("/")
        self.api_key = api_key or os.environ.get(API_KEY_ENV, "")
        self.retries = retries
        self.timeout = timeout
        if not self.base_url:
            raise ValueError(f"no provider base URL; set {BASE_URL_ENV}")

    def complete(self, role, model, messages, temperature, max_tokens):
        import httpx

        payload = {
            "model": model,
            "messages": [{"role": tag, "content": text} for tag, text in messages],
            "temperature": temperature,
            "max_tokens": max_tokens,
        }
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_exc: Exception | None = None
        for attempt in range(1, self.retries + 1):
            try:
                response = httpx.post(
                    f"{self.base_url}/chat/completions",
                    json=payload, headers=headers, timeout=self.timeout,
                )
                response.raise_for_status()
                body = response.json()
                text = body["choices"][0]["message"]["content"]
                if not text:
                    raise ProviderRefusalError("provider returned an empty completion")
                return text
            except ProviderRefusalError:
                raise
            except Exception as exc:  # httpx errors, malformed bodies
                last_exc = exc
                log.warning("provider attempt %d/%d failed: %s", attempt, self.retries, exc)
                if attempt < self.retries:
                    time.sleep(0.2 * attempt)
        raise TransportError(f"provider unreachable after {self.retries} attempts") from last_exc


class ScriptedProvider:
    """Replays a declared transcript, keyed by role and call order.

    ``script`` maps a role to an ordered list of entries. Each entry is
    either a bare reply string or an ``(expected_substring, reply)`` pair;
    when a substring is declared it must occur in the rendered prompt or
    the call fails with TranscriptMismatchError. Exhaustion is a failure
    in strict mode.
    """

    def __init__(self, script: dict[str, list], strict: bool = True,
                 fallback: str = ""):
        self._script = {role: list(entries) for role, entries in script.items()}
        self._cursor = {role: 0 for role in script}
        self.strict = strict
        self.fallback = fallback
        self.calls: list[tuple[str, str]] = []

    def complete(self, role, model, messages, temperature, max_tokens):
        prompt = "\n".join(text for _, text in messages)
        self.calls.append((role, prompt))
        entries = self._script.get(role)
        if entries is None or self._cursor.get(role, 0) >= len(entries):
            if self.strict:
                raise TranscriptMismatchError(f"no scripted reply left for role '{role}'")
            return self.fallback
        entry = entries[self._cursor[role]]
        self._cursor[role] += 1
        if isinstance(entry, tuple):
            expected, reply = entry
            if expected not in prompt:
                raise TranscriptMismatchError(
                    f"role '{role}' call {self._cursor[role]} expected "
                    f"{expected!r} in prompt"
                )
            return reply
        return entry

    @property
    def call_count(self) -> int:
        return len(self.calls)


class CallableProvider:
    """Adapts ``fn(role, messages) -> str`` to the provider interface.

    Used for programmatic test doubles such as the world-rule oracles.
    """

    def __init__(self, fn: Callable[[str, list[tuple[str, str]]], str]):
        self._fn = fn
        self.calls: list[str] = []

    def complete(self, role, model, messages, temperature, max_tokens):
        self.calls.append(role)
        return self._fn(role, messages)

    @property
    def call_count(self) -> int:
        return len(self.calls)
