"""Uniform chat-completion gateway with transcript record/replay.

One gateway instance serves every LLM use in the pipeline (SQL
generation, question rewriting, skeleton extraction, gateway-backed
linking); calls are distinguished by model id and prompt. Requests are
hashed over a canonical JSON form, so replaying a transcript store makes
a whole pipeline run byte-reproducible.

Wire format is the OpenAI-compatible chat-completions API; endpoint and
key come from ``SOLIDQL_API_BASE`` / ``SOLIDQL_API_KEY``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Protocol

import requests

from .errors import ConfigError, ProviderError, RateLimited, ReplayMiss

logger = logging.getLogger(__name__)

MODES = ("live", "record", "replay")


@dataclass(frozen=True)
class ChatRequest:
    model_id: str
    messages: tuple[tuple[str, str], ...]
    temperature: float = 0.0
    max_tokens: int = 512

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("messages must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


def canonical_request(request: ChatRequest) -> dict:
    return {
        "max_tokens": request.max_tokens,
        "messages": [{"content": text, "role": role} for role, text in request.messages],
        "model_id": request.model_id,
        "temperature": request.temperature,
    }


def request_hash(request: ChatRequest) -> str:
    """Stable digest of the canonical request; key of the transcript store."""
    payload = json.dumps(canonical_request(request), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Transcript:
    request_hash: str
    response: str
    provider: str
    recorded_at: str


class TranscriptStore:
    """Append-only line-delimited store of request/response transcripts."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._lock = threading.Lock()
        self._transcripts: dict[str, Transcript] = {}
        if self.path.exists():
            with self.path.open(encoding="utf-8") as handle:
                for line in handle:
                    line = line.strip()
                    if not line:
                        continue
                    record = json.loads(line)
                    self._transcripts[record["hash"]] = Transcript(
                        request_hash=record["hash"],
                        response=record["response"],
                        provider=record.get("provider", ""),
                        recorded_at=record.get("recorded_at", ""),
                    )

    def __len__(self) -> int:
        return len(self._transcripts)

    def lookup(self, digest: str) -> str | None:
        transcript = self._transcripts.get(digest)
        return transcript.response if transcript else None

    def record(self, request: ChatRequest, response: str, provider: str) -> None:
        digest = request_hash(request)
        transcript = Transcript(
            request_hash=digest,
            response=response,
            provider=provider,
            recorded_at=datetime.now(timezone.utc).isoformat(),
        )
        with self._lock:
            if digest in self._transcripts:
                return
            self._transcripts[digest] = transcript
            entry = {
                "hash": digest,
                "request": canonical_request(request),
                "response": response,
                "provider": transcript.provider,
                "recorded_at": transcript.recorded_at,
            }
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(json.dumps(entry, sort_keys=True) + "\n")


class ChatProvider(Protocol):
    name: str

    def __call__(self, request: ChatRequest) -> str: ...


class HttpChatProvider:
    """OpenAI-compatible chat endpoint with bounded exponential backoff."""

    def __init__(
        self,
        api_base: str,
        api_key: str = "",
        *,
        timeout: float = 60.0,
        max_retries: int = 3,
        backoff: float = 0.5,
    ) -> None:
        self.api_base = api_base.rstrip("/")
        self.api_key = api_key
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff
        self.name = f"http:{self.api_base}"

    @classmethod
    def from_env(cls, **kwargs) -> "HttpChatProvider":
        api_base = os.environ.get("SOLIDQL_API_BASE", "")
        if not api_base:
            raise ConfigError("SOLIDQL_API_BASE is not set; cannot reach a live provider")
        return cls(api_base, os.environ.get("SOLIDQL_API_KEY", ""), **kwargs)

    def __call__(self, request: ChatRequest) -> str:
        payload = {
            "model": request.model_id,
            "messages": [{"role": role, "content": text} for role, text in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        last_error: Exception | None = None
        rate_limited = False
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                response = requests.post(
                    f"{self.api_base}/chat/completions",
                    json=payload,
                    headers=headers,
                    timeout=self.timeout,
                )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if response.status_code == 429:
                rate_limited = True
                last_error = ProviderError(f"rate limited: {response.text[:200]}")
                continue
            if response.status_code >= 500:
                last_error = ProviderError(f"HTTP {response.status_code}: {response.text[:200]}")
                continue
            if response.status_code != 200:
                raise ProviderError(f"HTTP {response.status_code}: {response.text[:200]}")
            try:
                return response.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, ValueError) as exc:
                raise ProviderError(f"malformed provider response: {exc}") from exc
        if rate_limited:
            raise RateLimited(f"still rate limited after {self.max_retries} retries")
        raise ProviderError(f"provider unreachable after {self.max_retries} retries: {last_error}")


class LlmGateway:
    """Completion front-end honoring the live / record / replay contract."""

    def __init__(
        self,
        mode: str = "replay",
        store: TranscriptStore | None = None,
        provider: ChatProvider | Callable[[ChatRequest], str] | None = None,
        max_concurrent: int | None = None,
    ) -> None:
        if mode not in MODES:
            raise ConfigError(f"unknown gateway mode {mode!r}")
        if mode in ("record", "replay") and store is None:
            raise ConfigError(f"{mode} mode needs a transcript store")
        if mode in ("live", "record") and provider is None:
            raise ConfigError(f"{mode} mode needs a provider")
        self.mode = mode
        self.store = store
        self.provider = provider
        self._semaphore = threading.Semaphore(max_concurrent) if max_concurrent else None
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, request: ChatRequest) -> str:
        with self._lock:
            self.calls += 1
        digest = request_hash(request)
        if self.mode == "replay":
            response = self.store.lookup(digest)
            if response is None:
                raise ReplayMiss(f"no transcript for request {digest[:12]}…")
            return response
        if self.mode == "record":
            cached = self.store.lookup(digest)
            if cached is not None:
                return cached
        if self._semaphore is not None:
            with self._semaphore:
                response = self.provider(request)
        else:
            response = self.provider(request)
        if self.mode == "record":
            provider_name = getattr(self.provider, "name", type(self.provider).__name__)
            self.store.record(request, response, provider_name)
        return response
