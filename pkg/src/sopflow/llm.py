"""Chat-completion transport: a pluggable client contract, an HTTP client
for any OpenAI-style endpoint, and a deterministic mock for tests and
offline demos.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol, Sequence

import httpx

from .errors import AuthError, EndpointError, TransportError


class Role(str, Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class ChatMessage:
    role: Role
    content: str

    def __post_init__(self) -> None:
        if not self.content:
            raise ValueError("chat message content must not be empty")


def messages_to_wire(messages: Sequence[ChatMessage]) -> list[dict]:
    return [{"role": m.role.value, "content": m.content} for m in messages]


def request_hash(messages: Sequence[ChatMessage]) -> str:
    """Stable fingerprint of a request, used by keyed mocks."""
    blob = json.dumps(messages_to_wire(messages), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class LlmClientConfig:
    endpoint: str
    model: str
    api_key: str = ""
    temperature: float = 0.0
    timeout: float = 60.0
    max_retries: int = 2

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    @classmethod
    def from_env(cls, **overrides) -> "LlmClientConfig":
        values = dict(
            endpoint=os.environ.get("LLM_ENDPOINT", "https://api.openai.com/v1"),
            model=os.environ.get("LLM_MODEL", "gpt-3.5-turbo"),
            api_key=os.environ.get("LLM_API_KEY", ""),
            timeout=float(os.environ.get("LLM_TIMEOUT_SECS", "60")),
        )
        values.update(overrides)
        return cls(**values)


class ChatClient(Protocol):
    """Anything that turns a message list into one assistant reply."""

    def complete(self, messages: Sequence[ChatMessage]) -> str: ...


class HttpChatClient:
    """Talks to ``{endpoint}/chat/completions`` with bearer-token auth.

    Transient transport failures are retried with exponential backoff up
    to ``max_retries`` times; HTTP error statuses are not retried. Safe for
    concurrent use across sessions.
    """

    def __init__(
        self,
        config: LlmClientConfig,
        backoff: float = 0.5,
        transport: httpx.BaseTransport | None = None,
    ):
        self.config = config
        self._backoff = backoff
        self._transport = transport

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        cfg = self.config
        url = cfg.endpoint.rstrip("/") + "/chat/completions"
        headers = {"Content-Type": "application/json"}
        if cfg.api_key:
            headers["Authorization"] = f"Bearer {cfg.api_key}"
        body = {
            "model": cfg.model,
            "messages": messages_to_wire(messages),
            "temperature": cfg.temperature,
        }

        last_exc: Exception | None = None
        for attempt in range(cfg.max_retries + 1):
            try:
                with httpx.Client(timeout=cfg.timeout, transport=self._transport) as client:
                    response = client.post(url, json=body, headers=headers)
                break
            except httpx.TransportError as exc:
                last_exc = exc
                if attempt < cfg.max_retries:
                    time.sleep(self._backoff * (2**attempt))
        else:
            raise TransportError(
                f"could not reach {url} after {cfg.max_retries + 1} attempt(s): {last_exc}"
            )

        if response.status_code in (401, 403):
            raise AuthError(f"endpoint rejected credentials (HTTP {response.status_code})")
        if not response.is_success:
            raise EndpointError(
                f"endpoint answered HTTP {response.status_code}",
                status=response.status_code,
                body=response.text[:2000],
            )
        try:
            content = response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise EndpointError(f"malformed completion payload: {exc}", body=response.text[:2000])
        if not isinstance(content, str):
            raise EndpointError("completion content is not text")
        return content


def complete_chat(
    config: LlmClientConfig,
    messages: Sequence[ChatMessage],
    transport: httpx.BaseTransport | None = None,
) -> str:
    """One-shot completion through a throwaway :class:`HttpChatClient`."""
    return HttpChatClient(config, transport=transport).complete(messages)


@dataclass
class MockChatClient:
    """Deterministic stand-in for an LLM endpoint.

    ``replies`` is a script consumed in request order; an entry may also be
    ``{"error": "transport"|"endpoint"}`` to simulate a failure. ``by_hash``
    maps :func:`request_hash` fingerprints to canned replies and is
    consulted first (and never consumed). Every request is recorded in
    ``requests`` so tests can inspect exactly what would have been sent.
    """

    replies: list = field(default_factory=list)
    by_hash: dict[str, str] = field(default_factory=dict)
    requests: list[tuple[ChatMessage, ...]] = field(default_factory=list)

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        self.requests.append(tuple(messages))
        key = request_hash(messages)
        if key in self.by_hash:
            return self.by_hash[key]
        if not self.replies:
            raise EndpointError("mock script exhausted")
        entry = self.replies.pop(0)
        if isinstance(entry, dict):
            kind = entry.get("error", "endpoint")
            if kind == "transport":
                raise TransportError("scripted transport failure")
            raise EndpointError("scripted endpoint failure", status=500)
        return entry

    @classmethod
    def from_script(cls, path: str) -> "MockChatClient":
        """Load ``{"replies": [...], "by_hash": {...}}`` from a JSON file."""
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
        if isinstance(data, list):
            return cls(replies=list(data))
        return cls(replies=list(data.get("replies", [])), by_hash=dict(data.get("by_hash", {})))
