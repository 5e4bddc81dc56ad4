"""HTTP clients for chat, transcription and embedding servers.

All three speak the common OpenAI-compatible wire shapes. Each request goes
through the endpoint's own in-flight bound and, when given, a shared global
bound. Transient failures (connection errors, timeouts, 429, 5xx) are
retried with exponential backoff; other 4xx responses fail immediately.
"""

from __future__ import annotations

import logging
import os
import threading
import time
from dataclasses import asdict, dataclass, field

import httpx
import numpy as np

from .preprocess.audio import AudioClip, wav_bytes

log = logging.getLogger(__name__)

RETRYABLE_STATUS = frozenset({408, 409, 425, 429, 500, 502, 503, 504})


class EndpointError(RuntimeError):
    """Request failed permanently or retries were exhausted."""

    def __init__(self, message: str, *, retries: int = 0, status: int | None = None):
        super().__init__(message)
        self.retries = retries
        self.status = status


@dataclass(frozen=True)
class DecodeParams:
    temperature: float = 0.0
    max_tokens: int = 512


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model_id: str
    api_key_env: str | None = None
    timeout_s: float = 60.0
    max_retries: int = 3
    max_in_flight: int = 4
    backoff_s: float = 0.5
    language: str | None = None
    decode_params: DecodeParams = field(default_factory=DecodeParams)

    def __post_init__(self):
        if isinstance(self.decode_params, dict):
            object.__setattr__(self, "decode_params", DecodeParams(**self.decode_params))
        if self.max_in_flight < 1:
            raise ValueError(f"max_in_flight must be >= 1, got {self.max_in_flight}")
        if not self.timeout_s > 0:
            raise ValueError(f"timeout_s must be > 0, got {self.timeout_s}")
        if self.max_retries < 0:
            raise ValueError(f"max_retries must be >= 0, got {self.max_retries}")

    @property
    def api_key(self) -> str | None:
        if not self.api_key_env:
            return None
        return os.environ.get(self.api_key_env)

    def to_dict(self) -> dict:
        """Serializable view without any secret."""
        return asdict(self)


class InFlightLimiter:
    """Counting semaphore that remembers the highest concurrency it saw."""

    def __init__(self, limit: int):
        if limit < 1:
            raise ValueError("limit must be >= 1")
        self.limit = limit
        self._sem = threading.BoundedSemaphore(limit)
        self._lock = threading.Lock()
        self.in_flight = 0
        self.peak = 0

    def __enter__(self):
        self._sem.acquire()
        with self._lock:
            self.in_flight += 1
            self.peak = max(self.peak, self.in_flight)
        return self

    def __exit__(self, *exc):
        with self._lock:
            self.in_flight -= 1
        self._sem.release()
        return False


class _NullLimiter:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


class HTTPEndpoint:
    path = ""

    def __init__(self, config: EndpointConfig, *, limiter: InFlightLimiter | None = None,
                 transport: httpx.BaseTransport | None = None, sleep=time.sleep):
        self.config = config
        self.limiter = InFlightLimiter(config.max_in_flight)
        self.global_limiter = limiter or _NullLimiter()
        self._sleep = sleep
        headers = {}
        if config.api_key:
            headers["Authorization"] = f"Bearer {config.api_key}"
        self._http = httpx.Client(base_url=config.base_url.rstrip("/") + "/", headers=headers,
                                  timeout=config.timeout_s, transport=transport)

    def close(self):
        self._http.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _post(self, **kwargs) -> tuple[dict, int]:
        """POST to the endpoint path; returns ``(json body, retries used)``."""
        last = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                self._sleep(self.config.backoff_s * 2 ** (attempt - 1))
            try:
                with self.global_limiter, self.limiter:
                    resp = self._http.post(self.path, **kwargs)
            except httpx.TransportError as exc:
                last = EndpointError(f"{self.path}: {type(exc).__name__}: {exc}", retries=attempt)
                log.warning("%s attempt %d failed: %s", self.path, attempt + 1, exc)
                continue
            if resp.status_code in RETRYABLE_STATUS:
                last = EndpointError(f"{self.path}: HTTP {resp.status_code}", retries=attempt,
                                     status=resp.status_code)
                log.warning("%s attempt %d: HTTP %d", self.path, attempt + 1, resp.status_code)
                continue
            if resp.status_code >= 400:
                raise EndpointError(f"{self.path}: HTTP {resp.status_code}: {resp.text[:200]}",
                                    retries=attempt, status=resp.status_code)
            try:
                return resp.json(), attempt
            except ValueError:
                last = EndpointError(f"{self.path}: response is not JSON", retries=attempt)
                continue
        last.retries = self.config.max_retries
        raise last


@dataclass(frozen=True)
class Completion:
    text: str
    completion_tokens: int | None
    retries: int


class ChatClient(HTTPEndpoint):
    path = "chat/completions"

    def complete(self, messages: list[dict], *, temperature: float | None = None,
                 max_tokens: int | None = None) -> Completion:
        params = self.config.decode_params
        payload = {
            "model": self.config.model_id,
            "messages": messages,
            "temperature": params.temperature if temperature is None else temperature,
            "max_tokens": params.max_tokens if max_tokens is None else max_tokens,
        }
        body, retries = self._post(json=payload)
        try:
            choice = body["choices"][0]
            text = choice["message"]["content"] if "message" in choice else choice["text"]
        except (KeyError, IndexError, TypeError):
            raise EndpointError(f"{self.path}: unexpected response shape", retries=retries) from None
        usage = body.get("usage") or {}
        tokens = usage.get("completion_tokens")
        return Completion(text or "", int(tokens) if tokens is not None else None, retries)


@dataclass(frozen=True)
class Transcription:
    text: str
    retries: int


class TranscriptionClient(HTTPEndpoint):
    path = "audio/transcriptions"

    def transcribe(self, clip: AudioClip) -> Transcription:
        data = {"model": self.config.model_id}
        if self.config.language:
            data["language"] = self.config.language
        files = {"file": ("clip.wav", wav_bytes(clip), "audio/wav")}
        body, retries = self._post(data=data, files=files)
        if not isinstance(body, dict) or not isinstance(body.get("text"), str):
            raise EndpointError(f"{self.path}: response has no text", retries=retries)
        return Transcription(body["text"], retries)


class EmbeddingClient(HTTPEndpoint):
    path = "embeddings"

    def embed(self, inputs: list[str]) -> np.ndarray:
        """One vector per input string, shape ``(len(inputs), dim)``."""
        if not inputs:
            return np.empty((0, 0))
        body, _ = self._post(json={"model": self.config.model_id, "input": list(inputs)})
        if isinstance(body, dict) and "data" in body:
            rows = sorted(body["data"], key=lambda d: d.get("index", 0))
            vectors = [r["embedding"] for r in rows]
        elif isinstance(body, dict) and "embeddings" in body:
            vectors = body["embeddings"]
        else:
            raise EndpointError(f"{self.path}: unexpected response shape")
        arr = np.asarray(vectors, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != len(inputs):
            raise EndpointError(f"{self.path}: expected {len(inputs)} vectors, got shape {arr.shape}")
        return arr
