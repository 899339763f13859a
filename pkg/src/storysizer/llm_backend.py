"""Completion backends: live HTTP, deterministic fixture replay, recording.

The fixture backend makes every pipeline run bit-reproducible offline;
the recording backend wraps the live one to capture new fixtures. The live
wire protocol is a minimal chat-completions-style JSON exchange, so any
provider with that shape works by configuring the base URL.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

from .domain import StorysizerError

logger = logging.getLogger("storysizer.llm")

API_KEY_ENV = "STORYSIZER_API_KEY"
BASE_URL_ENV = "STORYSIZER_BASE_URL"

DEFAULT_MODEL_ID = "gpt-4"
DEFAULT_MAX_TOKENS = 2048
DEFAULT_TIMEOUT_SECONDS = 60.0


class BackendError(StorysizerError):
    code = "BACKEND_ERROR"


class Timeout(BackendError):
    code = "TIMEOUT"


class RateLimited(BackendError):
    code = "RATE_LIMITED"


class Transport(BackendError):
    code = "TRANSPORT"


class ProviderError(BackendError):
    code = "PROVIDER_ERROR"

    def __init__(self, status: int, body: str) -> None:
        super().__init__(f"provider returned HTTP {status}: {body[:200]}")
        self.status = status
        self.body = body


class FixtureMiss(BackendError):
    code = "FIXTURE_MISS"

    def __init__(self, request_key: str) -> None:
        super().__init__(f"no recorded response for request key {request_key}")
        self.request_key = request_key


class FixtureConflict(BackendError):
    code = "FIXTURE_CONFLICT"


def request_key(prompt: str, model_id: str, temperature: float) -> str:
    """Stable lowercase-hex key for a completion request.

    Keyed on content, not call order, so fixtures survive question
    reordering across sessions.
    """
    payload = json.dumps(
        {"model_id": model_id, "prompt": prompt, "temperature": float(temperature)},
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    model_id: str = DEFAULT_MODEL_ID
    temperature: float = 0.0
    max_tokens: int = DEFAULT_MAX_TOKENS

    def __post_init__(self) -> None:
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")

    @property
    def request_key(self) -> str:
        return request_key(self.prompt, self.model_id, self.temperature)


class CompletionBackend(Protocol):
    def complete(self, request: CompletionRequest) -> str: ...


@dataclass
class FixtureStore:
    """On-disk map of request keys to recorded response text."""

    entries: dict[str, str] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | Path) -> "FixtureStore":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
            entries = dict(doc["entries"])
            metadata = dict(doc.get("metadata", {}))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise BackendError(f"cannot load fixture file {path}: {exc}") from exc
        return cls(entries=entries, metadata=metadata)

    def save(self, path: str | Path) -> None:
        path = Path(path)
        doc = {"metadata": self.metadata, "entries": self.entries}
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(
            json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )
        os.replace(tmp, path)

    def record(self, request: CompletionRequest, response: str, force: bool = False) -> None:
        """Store a response; re-recording a key with different text needs force."""
        key = request.request_key
        existing = self.entries.get(key)
        if existing is not None and existing != response and not force:
            raise FixtureConflict(
                f"request key {key} already recorded with different text"
            )
        self.entries[key] = response


class FixtureBackend:
    """Strict replay: a stored key returns byte-identical text, an unknown
    key is an error rather than a silent live call."""

    def __init__(self, store: FixtureStore) -> None:
        self.store = store

    def complete(self, request: CompletionRequest) -> str:
        text = self.store.entries.get(request.request_key)
        if text is None:
            raise FixtureMiss(request.request_key)
        return text


class RecordingBackend:
    """Answers from the store when possible; otherwise asks the inner
    backend and persists the response. Store writes are serialized."""

    def __init__(
        self,
        inner: CompletionBackend,
        store: FixtureStore,
        path: str | Path,
        force: bool = False,
    ) -> None:
        self.inner = inner
        self.store = store
        self.path = Path(path)
        self.force = force
        self._lock = threading.Lock()

    def complete(self, request: CompletionRequest) -> str:
        key = request.request_key
        with self._lock:
            cached = self.store.entries.get(key)
        if cached is not None:
            return cached
        text = self.inner.complete(request)
        with self._lock:
            self.store.record(request, text, force=self.force)
            self.store.save(self.path)
        return text


class LiveBackend:
    """Minimal chat-completions HTTP client with bounded retry.

    Transient failures (timeouts, transport errors, 429, 5xx) are retried
    with exponential backoff up to ``max_attempts``; other statuses raise
    immediately. Returns provider text verbatim, no trimming.
    """

    def __init__(
        self,
        base_url: str,
        timeout_seconds: float = DEFAULT_TIMEOUT_SECONDS,
        api_key: str | None = None,
        max_attempts: int = 3,
        backoff_base: float = 0.5,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        if not base_url:
            raise BackendError("live backend requires a base URL")
        self.base_url = base_url.rstrip("/")
        self.timeout_seconds = timeout_seconds
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.sleep = sleep

    def complete(self, request: CompletionRequest) -> str:
        import httpx  # deferred so fixture-only runs never pay the import

        url = self.base_url + "/chat/completions"
        body = {
            "model": request.model_id,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        for attempt in range(1, self.max_attempts + 1):
            error: BackendError
            try:
                resp = httpx.post(url, json=body, headers=headers, timeout=self.timeout_seconds)
            except httpx.TimeoutException as exc:
                error = Timeout(str(exc))
            except httpx.HTTPError as exc:
                error = Transport(str(exc))
            else:
                if resp.status_code == 200:
                    return self._extract_text(resp)
                if resp.status_code == 429:
                    error = RateLimited(f"provider rate limited: {resp.text[:200]}")
                elif resp.status_code >= 500:
                    error = ProviderError(resp.status_code, resp.text)
                else:
                    raise ProviderError(resp.status_code, resp.text)
            if attempt == self.max_attempts:
                raise error
            delay = self.backoff_base * 2 ** (attempt - 1)
            logger.warning(
                "retrying completion after %s (attempt %d/%d, backoff %.2fs)",
                error.code,
                attempt,
                self.max_attempts,
                delay,
            )
            self.sleep(delay)
        raise AssertionError("unreachable")

    @staticmethod
    def _extract_text(resp) -> str:
        try:
            data = resp.json()
            return data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderError(resp.status_code, resp.text) from exc


def make_backend(
    descriptor: str,
    *,
    timeout_seconds: float = DEFAULT_TIMEOUT_SECONDS,
    metadata: dict | None = None,
) -> CompletionBackend:
    """Build a backend from a ``live:<url>``, ``fixture:<path>`` or
    ``record:<path>`` descriptor.

    Record mode wraps a live backend whose base URL comes from the
    STORYSIZER_BASE_URL environment variable.
    """
    scheme, sep, rest = descriptor.partition(":")
    if not sep or not rest:
        raise BackendError(f"invalid backend descriptor: {descriptor!r}")
    if scheme == "fixture":
        return FixtureBackend(FixtureStore.load(rest))
    if scheme == "live":
        return LiveBackend(rest, timeout_seconds=timeout_seconds)
    if scheme == "record":
        base_url = os.environ.get(BASE_URL_ENV, "")
        if not base_url:
            raise BackendError(
                f"record mode needs {BASE_URL_ENV} set to the live base URL"
            )
        path = Path(rest)
        store = FixtureStore.load(path) if path.exists() else FixtureStore()
        if metadata:
            store.metadata.update(metadata)
        return RecordingBackend(LiveBackend(base_url, timeout_seconds=timeout_seconds), store, path)
    raise BackendError(f"unknown backend descriptor scheme: {scheme!r}")
