"""Uniform contract over text-generation and embedding backends.

Remote backends speak JSON-over-HTTP with retry/backoff and a bounded
in-flight request count. Mock backends are pure functions of (input, seed),
which is what makes full pipeline runs byte-reproducible in tests.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass
from enum import Enum

import httpx
import numpy as np

from .errors import ParseError, TransportError, UsageError

logger = logging.getLogger(__name__)


class BackendKind(Enum):
    REMOTE_GENERATION = "RemoteGeneration"
    REMOTE_EMBEDDING = "RemoteEmbedding"
    MOCK_GENERATION = "MockGeneration"
    MOCK_EMBEDDING = "MockEmbedding"


GENERATION_KINDS = (BackendKind.REMOTE_GENERATION, BackendKind.MOCK_GENERATION)
EMBEDDING_KINDS = (BackendKind.REMOTE_EMBEDDING, BackendKind.MOCK_EMBEDDING)


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    max_tokens: int = 256
    temperature: float = 0.0

    def __post_init__(self):
        if not self.prompt:
            raise UsageError("prompt must be nonempty")
        if self.max_tokens <= 0:
            raise UsageError("max_tokens must be positive")
        if self.temperature < 0:
            raise UsageError("temperature must be non-negative")


@dataclass(frozen=True)
class EmbeddingVector:
    values: np.ndarray
    norm: float

    @staticmethod
    def normalized(values: np.ndarray) -> "EmbeddingVector":
        arr = np.asarray(values, dtype=np.float64)
        norm = float(np.linalg.norm(arr))
        if norm == 0.0:
            raise UsageError("cannot normalize a zero vector")
        return EmbeddingVector(values=arr / norm, norm=1.0)


def vectors_to_matrix(vectors: list[EmbeddingVector]) -> np.ndarray:
    return np.stack([v.values for v in vectors])


@dataclass(frozen=True)
class BackendDescriptor:
    kind: BackendKind
    model_name: str = "mock"
    endpoint: str | None = None
    seed: int | None = None
    mock_dim: int = 64

    def __post_init__(self):
        remote = self.kind in (BackendKind.REMOTE_GENERATION, BackendKind.REMOTE_EMBEDDING)
        if remote and not self.endpoint:
            raise UsageError(f"{self.kind.value} backend requires an endpoint")
        if not remote and self.seed is None:
            raise UsageError(f"{self.kind.value} backend requires a seed")


@dataclass
class GatewayConfig:
    """Orchestration knobs: retry budget, timeout, concurrency, audit."""

    max_attempts: int = 4
    backoff_base: float = 0.25
    backoff_cap: float = 8.0
    timeout: float = 60.0
    max_in_flight: int = 8
    api_key_env: str = "THEMEFORGE_API_KEY"
    audit_path: str | None = None
    sleep: object = time.sleep  # injectable for tests

    def __post_init__(self):
        self._slots = threading.BoundedSemaphore(self.max_in_flight)
        self._audit_lock = threading.Lock()

    def _audit(self, record: dict) -> None:
        if not self.audit_path:
            return
        line = json.dumps(record, ensure_ascii=False)
        with self._audit_lock, open(self.audit_path, "a", encoding="utf-8") as handle:
            handle.write(line + "\n")


DEFAULT_CONFIG = GatewayConfig()

_RETRYABLE_STATUS = {408, 429, 500, 502, 503, 504}


def _post_with_retries(
    backend: BackendDescriptor,
    payload: dict,
    config: GatewayConfig,
    transport: httpx.BaseTransport | None,
) -> dict:
    headers = {}
    api_key = os.environ.get(config.api_key_env)
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"

    last_error: str = "no attempt made"
    with config._slots:
        with httpx.Client(timeout=config.timeout, transport=transport) as client:
            for attempt in range(config.max_attempts):
                if attempt:
                    delay = min(config.backoff_cap, config.backoff_base * 2 ** (attempt - 1))
                    config.sleep(delay)
                try:
                    response = client.post(backend.endpoint, json=payload, headers=headers)
                except httpx.HTTPError as exc:
                    last_error = f"transport failure: {exc}"
                    logger.warning("attempt %d to %s failed: %s", attempt + 1, backend.endpoint, exc)
                    continue
                if response.status_code in _RETRYABLE_STATUS:
                    last_error = f"HTTP {response.status_code}"
                    logger.warning(
                        "attempt %d to %s got %d", attempt + 1, backend.endpoint, response.status_code
                    )
                    continue
                if response.status_code != 200:
                    raise TransportError(
                        f"{backend.endpoint} returned HTTP {response.status_code}"
                    )
                body = response.json()
                config._audit({"request": payload, "response": body})
                return body
    raise TransportError(
        f"{backend.endpoint} failed after {config.max_attempts} attempts ({last_error})"
    )


def _digest(*parts: str) -> bytes:
    h = hashlib.blake2b(digest_size=16)
    for part in parts:
        h.update(part.encode("utf-8"))
        h.update(b"\x00")
    return h.digest()


# Small English vocabulary the mock samples topic words from. Content is
# irrelevant; the pipeline only needs deterministic, parseable completions.
_MOCK_WORDS = (
    "election", "debate", "economy", "protest", "climate", "media", "reform",
    "europe", "security", "health", "sport", "culture", "justice", "energy",
    "housing", "immigration", "agriculture", "education", "budget", "strike",
)

_DETECT_RE = re.compile(r"Detect (one|two|three|four|five) main topics?")
_WORD_TO_N = {"one": 1, "two": 2, "three": 3, "four": 4, "five": 5}
_STANCE_MARKER = "Respond with exactly one word"
_NAMING_MARKER = "single short name"


def _mock_words(key: bytes, count: int) -> list[str]:
    words = []
    for i in range(count):
        idx = int.from_bytes(_digest(key.hex(), str(i))[:4], "big") % len(_MOCK_WORDS)
        words.append(_MOCK_WORDS[idx])
    return words


def _mock_generate(prompt: str, seed: int) -> str:
    """Deterministic completion shaped by what the prompt asks for."""
    key = _digest(str(seed), prompt)
    match = _DETECT_RE.search(prompt)
    if match:
        n = _WORD_TO_N[match.group(1)]
        lines = []
        for rank in range(1, n + 1):
            n_words = 1 + int.from_bytes(_digest(key.hex(), f"len{rank}")[:2], "big") % 3
            words = _mock_words(_digest(key.hex(), f"topic{rank}"), n_words)
            lines.append(f"{rank}. {' '.join(w.capitalize() for w in words)}")
        return "\n".join(lines)
    if _STANCE_MARKER in prompt:
        labels = ("Against", "Favor", "Neutral")
        return labels[int.from_bytes(key[:4], "big") % 3]
    if _NAMING_MARKER in prompt:
        words = _mock_words(key, 2)
        return " ".join(w.capitalize() for w in words)
    return " ".join(_mock_words(key, 4))


def generate(
    request: GenerationRequest,
    backend: BackendDescriptor,
    config: GatewayConfig = DEFAULT_CONFIG,
    transport: httpx.BaseTransport | None = None,
) -> str:
    """Run one completion against a generation backend."""
    if backend.kind not in GENERATION_KINDS:
        raise UsageError(f"{backend.kind.value} backend cannot generate text")
    if backend.kind is BackendKind.MOCK_GENERATION:
        completion = _mock_generate(request.prompt, backend.seed)
        config._audit({"mock": True, "prompt": request.prompt, "completion": completion})
        return completion
    payload = {
        "model": backend.model_name,
        "prompt": request.prompt,
        "parameters": {
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
        },
    }
    body = _post_with_retries(backend, payload, config, transport)
    try:
        return body["text"]
    except (KeyError, TypeError) as exc:
        raise TransportError(f"malformed generation response: {body!r}") from exc


def _mock_embed(text: str, seed: int, dim: int) -> np.ndarray:
    rng = np.random.default_rng(int.from_bytes(_digest(str(seed), text), "big"))
    return rng.standard_normal(dim)


def embed_batch(
    texts: list[str],
    backend: BackendDescriptor,
    config: GatewayConfig = DEFAULT_CONFIG,
    transport: httpx.BaseTransport | None = None,
) -> list[EmbeddingVector]:
    """Embed texts in order, L2-normalizing every returned vector."""
    if backend.kind not in EMBEDDING_KINDS:
        raise UsageError(f"{backend.kind.value} backend cannot embed text")
    if not texts:
        raise UsageError("embed_batch requires at least one text")
    if backend.kind is BackendKind.MOCK_EMBEDDING:
        raw = [_mock_embed(text, backend.seed, backend.mock_dim) for text in texts]
    else:
        payload = {"model": backend.model_name, "inputs": texts}
        body = _post_with_retries(backend, payload, config, transport)
        try:
            raw = [np.asarray(v, dtype=np.float64) for v in body["vectors"]]
        except (KeyError, TypeError) as exc:
            raise TransportError(f"malformed embedding response: {body!r}") from exc
        if len(raw) != len(texts):
            raise TransportError(
                f"backend returned {len(raw)} vectors for {len(texts)} texts"
            )
    dims = {v.shape for v in raw}
    if len(dims) != 1:
        raise TransportError(f"dimension mismatch across batch: {sorted(dims)}")
    return [EmbeddingVector.normalized(v) for v in raw]


_NUMBERED_LINE_RE = re.compile(r"^\s*(\d+)[.)]\s*(.+?)\s*$")


@dataclass(frozen=True)
class ParsedTopic:
    rank: int
    text: str
    original: str = ""  # pre-repair text when truncation applied


def parse_numbered_topics(completion: str, expected_n: int) -> list[ParsedTopic]:
    """Extract "<k>. <text>" lines, repairing over-long topics.

    Topics longer than three words are truncated to their first three words
    (the original is kept on the record and logged). At most `expected_n`
    topics are returned; fewer are tolerated as long as one line parsed.
    """
    if expected_n <= 0:
        raise UsageError("expected_n must be positive")
    parsed: list[ParsedTopic] = []
    for line in completion.splitlines():
        match = _NUMBERED_LINE_RE.match(line)
        if not match:
            continue
        text = match.group(2).strip()
        if not text:
            continue
        words = text.split()
        original = ""
        if len(words) > 3:
            original = text
            text = " ".join(words[:3])
            logger.info("truncated over-long topic %r to %r", original, text)
        parsed.append(ParsedTopic(rank=len(parsed) + 1, text=text, original=original))
        if len(parsed) == expected_n:
            break
    if not parsed:
        raise ParseError("no numbered topic lines found", raw=completion)
    return parsed
