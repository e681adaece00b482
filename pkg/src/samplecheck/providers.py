"""Clients for generation and embedding endpoints, plus an offline mock embedder.

All model access in the repo flows through this module. The wire protocol is
JSON-over-HTTP with chat-completions-shaped generation requests and
embeddings-shaped embedding requests; API keys are read from environment
variables only and never appear in config files or logs.
"""

from __future__ import annotations

import hashlib
import logging
import os
import random
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import requests

from .errors import SampleCheckError
from .vectors import Embedding, NonFiniteInput

log = logging.getLogger(__name__)

# Default embedding dimensionality per known model preset. Endpoints returning
# a different length for these models are treated as misbehaving.
PRESET_DIMS: dict[str, int] = {
    "gpt-text-embedding-large": 3072,
    "sfr-embedding-mistral": 4096,
    "e5-mistral-7b-instruct": 4096,
    "gte-qwen1.5-7b-instruct": 4096,
    "stella-en-1.5b-v5": 4096,
    "stella-en-400m-v5": 4096,
    "deberta-xlarge-mnli": 1024,
    "roberta-large": 1024,
    "clip-vit-large": 768,
}

DEFAULT_TEMPERATURE = 1.0


class AuthError(SampleCheckError):
    """Missing or rejected credentials."""


class TransportError(SampleCheckError):
    """Network-level failure that persisted through all retries."""


class MalformedResponse(SampleCheckError):
    """The endpoint answered, but not in the expected shape."""


class DimMismatch(SampleCheckError):
    """Endpoint returned an embedding whose length contradicts the model preset."""


class EmptyText(SampleCheckError):
    """Cannot embed empty text (or text with no tokens)."""


@dataclass(frozen=True)
class ProviderConfig:
    """Connection settings for one HTTP endpoint."""

    base_url: str
    api_key_env: str | None = None
    timeout: float = 30.0
    max_retries: int = 3
    max_concurrency: int = 4
    backoff_base: float = 1.0

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")


@dataclass(frozen=True)
class GenerationRequest:
    """One sampling job: k independent completions of the same prompt."""

    prompt: str
    k: int
    model_id: str
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = 1024
    top_p: float | None = None
    top_k: int | None = None

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")


def _auth_headers(cfg: ProviderConfig) -> dict[str, str]:
    if not cfg.api_key_env:
        return {}
    key = os.environ.get(cfg.api_key_env)
    if key is None:
        raise AuthError(f"environment variable {cfg.api_key_env!r} is not set")
    return {"Authorization": f"Bearer {key}"}


def _redacted(headers: dict[str, str]) -> dict[str, str]:
    return {k: ("<redacted>" if k.lower() == "authorization" else v) for k, v in headers.items()}


def _post_json(cfg: ProviderConfig, path: str, payload: dict) -> dict:
    """POST with retries (exponential backoff + jitter) on transient failures."""
    url = cfg.base_url.rstrip("/") + path
    headers = _auth_headers(cfg)
    last_exc: Exception | None = None
    for attempt in range(cfg.max_retries + 1):
        if attempt > 0:
            delay = cfg.backoff_base * (2 ** (attempt - 1)) * (1.0 + random.random())
            time.sleep(delay)
        try:
            log.debug("POST %s headers=%s payload=%s", url, _redacted(headers), payload)
            resp = requests.post(url, json=payload, headers=headers, timeout=cfg.timeout)
        except requests.RequestException as exc:
            last_exc = exc
            continue
        if resp.status_code in (401, 403):
            raise AuthError(f"endpoint rejected credentials (HTTP {resp.status_code})")
        if resp.status_code == 429 or resp.status_code >= 500:
            last_exc = TransportError(f"HTTP {resp.status_code} from {url}")
            continue
        if resp.status_code != 200:
            raise MalformedResponse(f"unexpected HTTP {resp.status_code} from {url}")
        try:
            body = resp.json()
        except ValueError as exc:
            raise MalformedResponse(f"non-JSON response from {url}") from exc
        log.debug("response from %s: %s", url, body)
        if not isinstance(body, dict):
            raise MalformedResponse(f"expected a JSON object from {url}")
        return body
    raise TransportError(
        f"request to {url} failed after {cfg.max_retries + 1} attempts: {last_exc}"
    ) from last_exc


def complete_once(
    prompt: str,
    cfg: ProviderConfig,
    *,
    model_id: str,
    temperature: float = DEFAULT_TEMPERATURE,
    max_tokens: int = 1024,
    top_p: float | None = None,
    top_k: int | None = None,
) -> str:
    """Request a single completion (no shared conversation state)."""
    payload: dict = {
        "model": model_id,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": temperature,
        "max_tokens": max_tokens,
        "n": 1,
    }
    if top_p is not None:
        payload["top_p"] = top_p
    if top_k is not None:
        payload["top_k"] = top_k
    body = _post_json(cfg, "/chat/completions", payload)
    try:
        text = body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedResponse("completion response missing choices[0].message.content") from exc
    if not isinstance(text, str):
        raise MalformedResponse("completion content is not a string")
    return text


def generate_samples(req: GenerationRequest, cfg: ProviderConfig) -> list[str]:
    """Sample k independent replies; output order equals sample index order.

    Each reply comes from its own completion call, so no reply has knowledge
    of any other. Calls run concurrently up to cfg.max_concurrency; results
    are keyed by index, so ordering is deterministic regardless of completion
    order.
    """

    def one(_: int) -> str:
        return complete_once(
            req.prompt,
            cfg,
            model_id=req.model_id,
            temperature=req.temperature,
            max_tokens=req.max_tokens,
            top_p=req.top_p,
            top_k=req.top_k,
        )

    if req.k == 1:
        return [one(0)]
    with ThreadPoolExecutor(max_workers=min(cfg.max_concurrency, req.k)) as pool:
        return list(pool.map(one, range(req.k)))


def embed_text(text: str, cfg: ProviderConfig, model_id: str) -> Embedding:
    """Embed one text via the embeddings endpoint, enforcing the preset dim."""
    if not text.strip():
        raise EmptyText("cannot embed empty text")
    body = _post_json(cfg, "/embeddings", {"model": model_id, "input": text})
    try:
        values = body["data"][0]["embedding"]
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedResponse("embedding response missing data[0].embedding") from exc
    if not isinstance(values, list) or not all(isinstance(v, (int, float)) for v in values):
        raise MalformedResponse("embedding is not a list of numbers")
    preset = PRESET_DIMS.get(model_id)
    if preset is not None and len(values) != preset:
        raise DimMismatch(
            f"model {model_id!r} returned {len(values)} values, preset expects {preset}"
        )
    try:
        return Embedding(np.asarray(values, dtype=np.float64), model_id=model_id)
    except (NonFiniteInput, ValueError) as exc:
        raise MalformedResponse(f"endpoint returned an invalid embedding: {exc}") from exc


_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs; drops empty tokens."""
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


def mock_embed(text: str, dim: int, seed: int = 0) -> Embedding:
    """Deterministic offline bag-of-tokens embedding.

    Each token is hashed (keyed by the seed) into one of dim buckets with a
    +/-1 sign; token counts accumulate and the result is L2-normalized.
    Identical text always yields the identical vector, and the embedding is
    invariant under token permutation but sensitive to token counts.
    """
    if dim < 8:
        raise ValueError("mock embedding dim must be >= 8")
    tokens = tokenize(text)
    if not tokens:
        raise EmptyText("cannot embed text with no tokens")
    key = seed.to_bytes(16, "little", signed=True)
    vec = np.zeros(dim, dtype=np.float64)
    for token in tokens:
        h = int.from_bytes(
            hashlib.blake2b(token.encode("utf-8"), digest_size=8, key=key).digest(), "little"
        )
        sign = 1.0 if (h >> 63) & 1 == 0 else -1.0
        vec[h % dim] += sign
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        # Hash collisions cancelled every count; fall back to a single bucket
        # derived from the sorted token multiset (keeps permutation invariance).
        h = int.from_bytes(
            hashlib.blake2b(b"\x00".join(t.encode("utf-8") for t in sorted(tokens)),
                            digest_size=8, key=key).digest(), "little"
        )
        vec[h % dim] = 1.0
        norm = 1.0
    return Embedding(vec / norm, model_id=f"mock-d{dim}-s{seed}")
