"""End-to-end verification: sample, embed, score, summarize, persist.

Every run is backed by a content-addressed disk cache so that re-runs skip
completed stages entirely. The cache key hashes (prompt, generation model,
temperature); the sample index is the file name, so editing the prompt
invalidates precisely the affected artifacts and nothing else.

Cache layout, per prompt hash:
    samples/<i>.txt                       reply text, one file per index
    samples/gt.txt                        ground-truth text (when given)
    embeddings/<model_id>/<i>.json        JSON array of numbers
    embeddings/<model_id>/gt.json         ground-truth embedding
    meta.json                             stage timestamps (stable on re-run)
    report.json                           the finished verification report
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import providers
from .errors import SampleCheckError
from .providers import ProviderConfig
from .scorematrix import (
    DEFAULT_THRESHOLDS,
    ConfidenceThresholds,
    MatrixSummary,
    SimilarityMatrix,
    build_matrix,
    summarize,
)
from .vectors import Embedding

log = logging.getLogger(__name__)

STAGE_GENERATE = "generate"
STAGE_EMBED = "embed"


class PartialFailure(SampleCheckError):
    """One or more per-sample provider calls failed after retries.

    The run aborts rather than shrinking k: a silently smaller sample count
    would change the meaning of the confidence statistics.
    """

    def __init__(self, stage: str, failures: dict[int | str, Exception]) -> None:
        keys = ", ".join(str(k) for k in sorted(failures, key=str))
        super().__init__(f"stage {stage!r} failed for indices [{keys}]: "
                         + "; ".join(f"{k}: {v}" for k, v in failures.items()))
        self.stage = stage
        self.failures = failures


class EmptyDocument(SampleCheckError):
    """chunk_document needs at least one token."""


class ParseError(SampleCheckError):
    """A vector file line is not a JSON array of numbers."""


class RaggedDims(SampleCheckError):
    """Vectors in one file must all share the same dimensionality."""


@dataclass(frozen=True)
class GeneratorConfig:
    """Which model generates replies, and how to reach it."""

    model_id: str
    provider: ProviderConfig
    temperature: float = providers.DEFAULT_TEMPERATURE
    max_tokens: int = 1024
    top_p: float | None = None
    top_k: int | None = None


@dataclass(frozen=True)
class EmbedderConfig:
    """Which embedder to use: an HTTP endpoint or the offline mock.

    kind "http" requires provider and model_id; kind "mock" is fully
    deterministic and needs only (dim, seed).
    """

    kind: str = "mock"
    model_id: str = ""
    provider: ProviderConfig | None = None
    dim: int = 4096
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("http", "mock"):
            raise ValueError("embedder kind must be 'http' or 'mock'")
        if self.kind == "http" and (self.provider is None or not self.model_id):
            raise ValueError("http embedder needs provider and model_id")

    @property
    def effective_model_id(self) -> str:
        if self.kind == "mock":
            return f"mock-d{self.dim}-s{self.seed}"
        return self.model_id

    def embedder(self) -> Callable[[str], Embedding]:
        if self.kind == "mock":
            return lambda text: providers.mock_embed(text, self.dim, self.seed)
        assert self.provider is not None
        return lambda text: providers.embed_text(text, self.provider, self.model_id)


@dataclass(frozen=True)
class SampleSet:
    """A prompt with its k replies and their embeddings."""

    prompt_id: str
    prompt: str
    replies: tuple[str, ...]
    embeddings: tuple[Embedding, ...]
    gt_text: str | None = None
    gt_embedding: Embedding | None = None

    def __post_init__(self) -> None:
        if len(self.replies) != len(self.embeddings):
            raise ValueError("replies and embeddings must align one-to-one")
        if len(self.replies) < 2:
            raise ValueError("a verifiable sample set needs k >= 2")
        if (self.gt_text is None) != (self.gt_embedding is None):
            raise ValueError("gt_text and gt_embedding must be given together")


@dataclass(frozen=True)
class VerificationReport:
    prompt_id: str
    k: int
    measure: str
    summary: MatrixSummary
    matrix: SimilarityMatrix
    thresholds: ConfidenceThresholds
    provenance: dict[str, object]


def prompt_hash(prompt: str, model_id: str, temperature: float) -> str:
    payload = json.dumps(
        {"prompt": prompt, "model_id": model_id, "temperature": temperature},
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:24]


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _now_iso() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _run_indexed(
    stage: str,
    jobs: dict[int | str, Callable[[], object]],
    max_concurrency: int,
) -> dict[int | str, object]:
    """Run per-index jobs concurrently; abort with PartialFailure if any fail."""
    results: dict[int | str, object] = {}
    failures: dict[int | str, Exception] = {}

    def run(item: tuple[int | str, Callable[[], object]]) -> None:
        key, job = item
        try:
            results[key] = job()
        except Exception as exc:  # collected, re-raised as PartialFailure
            failures[key] = exc

    if len(jobs) <= 1 or max_concurrency <= 1:
        for item in jobs.items():
            run(item)
    else:
        with ThreadPoolExecutor(max_workers=max_concurrency) as pool:
            list(pool.map(run, jobs.items()))
    if failures:
        raise PartialFailure(stage, failures)
    return results


class _Cache:
    """Disk cache for one prompt: samples, embeddings, timestamps."""

    def __init__(self, root: Path, key: str) -> None:
        self.dir = root / key

    def sample_path(self, index: int | str) -> Path:
        return self.dir / "samples" / f"{index}.txt"

    def embedding_path(self, model_id: str, index: int | str) -> Path:
        safe = re.sub(r"[^0-9A-Za-z._-]+", "_", model_id)
        return self.dir / "embeddings" / safe / f"{index}.json"

    def report_path(self) -> Path:
        return self.dir / "report.json"

    def load_text(self, index: int | str) -> str | None:
        p = self.sample_path(index)
        return p.read_text(encoding="utf-8") if p.exists() else None

    def store_text(self, index: int | str, text: str) -> None:
        _atomic_write(self.sample_path(index), text.encode("utf-8"))

    def load_embedding(self, model_id: str, index: int | str) -> Embedding | None:
        p = self.embedding_path(model_id, index)
        if not p.exists():
            return None
        values = json.loads(p.read_text(encoding="utf-8"))
        return Embedding(np.asarray(values, dtype=np.float64), model_id=model_id)

    def store_embedding(self, model_id: str, index: int | str, emb: Embedding) -> None:
        data = json.dumps(emb.tolist()).encode("utf-8")
        _atomic_write(self.embedding_path(model_id, index), data)

    def meta(self) -> dict:
        p = self.dir / "meta.json"
        return json.loads(p.read_text(encoding="utf-8")) if p.exists() else {}

    def update_meta(self, updates: dict) -> dict:
        meta = self.meta()
        changed = False
        for key, value in updates.items():
            if key not in meta:
                meta[key] = value
                changed = True
        if changed:
            _atomic_write(self.dir / "meta.json",
                          json.dumps(meta, sort_keys=True, indent=2).encode("utf-8"))
        return meta


def verify(
    prompt: str,
    gt: str | None,
    k: int,
    gen_cfg: GeneratorConfig,
    embed_cfg: EmbedderConfig,
    thresholds: ConfidenceThresholds = DEFAULT_THRESHOLDS,
    *,
    measure: str = "cosine",
    cache_dir: Path | str | None = None,
    max_concurrency: int | None = None,
) -> VerificationReport:
    """Run the full verification pipeline for one prompt.

    Stages: generate k replies, embed them (plus the optional ground truth),
    build the pairwise similarity matrix, summarize. Each per-sample provider
    call that is already cached is skipped; with a warm cache the whole run
    makes zero network calls and the resulting report is byte-identical.
    """
    if k < 2:
        raise ValueError("k must be >= 2 for verification")
    key = prompt_hash(prompt, gen_cfg.model_id, gen_cfg.temperature)
    cache = _Cache(Path(cache_dir), key) if cache_dir is not None else None
    gen_workers = max_concurrency or gen_cfg.provider.max_concurrency
    embed_workers = max_concurrency or (
        embed_cfg.provider.max_concurrency if embed_cfg.provider else gen_workers
    )

    # Stage 1: generate (or load) the k replies.
    replies: dict[int | str, str] = {}
    jobs: dict[int | str, Callable[[], object]] = {}
    for i in range(k):
        cached = cache.load_text(i) if cache else None
        if cached is not None:
            replies[i] = cached
        else:
            jobs[i] = lambda: providers.complete_once(
                prompt,
                gen_cfg.provider,
                model_id=gen_cfg.model_id,
                temperature=gen_cfg.temperature,
                max_tokens=gen_cfg.max_tokens,
                top_p=gen_cfg.top_p,
                top_k=gen_cfg.top_k,
            )
    if jobs:
        for i, text in _run_indexed(STAGE_GENERATE, jobs, gen_workers).items():
            replies[i] = str(text)
            if cache:
                cache.store_text(i, replies[i])
    if cache:
        meta = cache.update_meta({"generated_at": _now_iso()})
    else:
        meta = {"generated_at": _now_iso()}

    # Ground truth is caller input, not generated: refresh the cache if the
    # text changed since the last run.
    if gt is not None and cache is not None:
        if cache.load_text("gt") != gt:
            cache.store_text("gt", gt)
            stale = cache.embedding_path(embed_cfg.effective_model_id, "gt")
            if stale.exists():
                stale.unlink()

    # Stage 2: embed replies and ground truth.
    model_id = embed_cfg.effective_model_id
    embed = embed_cfg.embedder()
    embeddings: dict[int | str, Embedding] = {}
    jobs = {}
    texts: dict[int | str, str] = {i: replies[i] for i in range(k)}
    if gt is not None:
        texts["gt"] = gt
    for index, text in texts.items():
        cached_emb = cache.load_embedding(model_id, index) if cache else None
        if cached_emb is not None:
            embeddings[index] = cached_emb
        else:
            jobs[index] = (lambda t=text: embed(t))
    if jobs:
        for index, emb in _run_indexed(STAGE_EMBED, jobs, embed_workers).items():
            assert isinstance(emb, Embedding)
            embeddings[index] = emb
            if cache:
                cache.store_embedding(model_id, index, emb)
    embed_meta_key = f"embedded_at:{model_id}"
    if cache:
        meta = cache.update_meta({embed_meta_key: _now_iso()})
    else:
        meta[embed_meta_key] = _now_iso()

    # Stage 3: score and summarize.
    sample_set = SampleSet(
        prompt_id=key,
        prompt=prompt,
        replies=tuple(replies[i] for i in range(k)),
        embeddings=tuple(embeddings[i] for i in range(k)),
        gt_text=gt,
        gt_embedding=embeddings.get("gt"),
    )
    matrix = build_matrix(
        list(sample_set.embeddings), sample_set.gt_embedding, measure
    )
    summary = summarize(matrix, thresholds)
    report = VerificationReport(
        prompt_id=key,
        k=k,
        measure=measure,
        summary=summary,
        matrix=matrix,
        thresholds=thresholds,
        provenance={
            "generation_model_id": gen_cfg.model_id,
            "embedding_model_id": model_id,
            "temperature": gen_cfg.temperature,
            "generated_at": meta["generated_at"],
            "embedded_at": meta[embed_meta_key],
        },
    )
    if cache:
        _atomic_write(cache.report_path(), report_json_bytes(report))
    return report


def report_json_bytes(report: VerificationReport) -> bytes:
    """Canonical JSON serialization: stable key order, full float precision."""
    obj = {
        "prompt_id": report.prompt_id,
        "k": report.k,
        "measure": report.measure,
        "thresholds": {
            "mean_min": report.thresholds.mean_min,
            "std_max": report.thresholds.std_max,
        },
        "summary": {
            "frobenius_normalized": report.summary.frobenius_normalized,
            "mean_offdiag": report.summary.mean_offdiag,
            "std_offdiag": report.summary.std_offdiag,
            "gt_alignment": report.summary.gt_alignment,
            "verdict": report.summary.verdict,
        },
        "matrix": {
            "labels": list(report.matrix.labels),
            "measure": report.matrix.measure,
            "entries": [[float(v) for v in row] for row in report.matrix.entries],
        },
        "provenance": report.provenance,
    }
    return (json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def report_from_json(data: bytes | str) -> VerificationReport:
    obj = json.loads(data)
    matrix = SimilarityMatrix(
        entries=np.asarray(obj["matrix"]["entries"], dtype=np.float64),
        labels=tuple(obj["matrix"]["labels"]),
        measure=obj["matrix"]["measure"],
    )
    s = obj["summary"]
    summary = MatrixSummary(
        frobenius_normalized=s["frobenius_normalized"],
        mean_offdiag=s["mean_offdiag"],
        std_offdiag=s["std_offdiag"],
        gt_alignment=s["gt_alignment"],
        verdict=s["verdict"],
    )
    thresholds = ConfidenceThresholds(**obj["thresholds"])
    return VerificationReport(
        prompt_id=obj["prompt_id"],
        k=obj["k"],
        measure=obj["measure"],
        summary=summary,
        matrix=matrix,
        thresholds=thresholds,
        provenance=obj["provenance"],
    )


_SENTENCE_END = ".!?"
_CLOSERS = "\"')]}"


def _ends_sentence(token: str) -> bool:
    stripped = token.rstrip(_CLOSERS)
    return bool(stripped) and stripped[-1] in _SENTENCE_END


def chunk_document(document: str, max_tokens: int, overlap_tokens: int = 0) -> list[str]:
    """Split a document into whitespace-token chunks of at most max_tokens.

    Greedy packing that prefers to cut at a sentence boundary whenever one
    exists inside the window; consecutive chunks share overlap_tokens tokens,
    and stripping the overlaps reproduces the original token sequence.
    """
    if max_tokens < 25:
        raise ValueError("max_tokens must be >= 25")
    if not 0 <= overlap_tokens < max_tokens:
        raise ValueError("overlap_tokens must satisfy 0 <= overlap < max_tokens")
    tokens = document.split()
    if not tokens:
        raise EmptyDocument("document contains no tokens")

    chunks: list[str] = []
    start = 0
    while start < len(tokens):
        window_end = min(start + max_tokens, len(tokens))
        end = window_end
        if window_end < len(tokens):
            # Cut at the last sentence end in the window, provided the chunk
            # stays long enough to make progress past the overlap.
            for pos in range(window_end, start + overlap_tokens, -1):
                if _ends_sentence(tokens[pos - 1]):
                    end = pos
                    break
        chunks.append(" ".join(tokens[start:end]))
        if end == len(tokens):
            break
        start = end - overlap_tokens
    return chunks


def ingest_vectors(path: Path | str, model_id: str = "ingested") -> list[Embedding]:
    """Load precomputed vectors from a JSON Lines file (one array per line).

    This is the entry point for any modality whose embeddings are produced
    elsewhere (e.g. image embeddings); the result feeds straight into
    build_matrix / the eval harness.
    """
    path = Path(path)
    embeddings: list[Embedding] = []
    dim: int | None = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                values = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(values, list) or not values or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in values
            ):
                raise ParseError(f"{path}:{lineno}: expected a non-empty JSON array of numbers")
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise RaggedDims(
                    f"{path}:{lineno}: vector has dim {len(values)}, expected {dim}"
                )
            embeddings.append(Embedding(np.asarray(values, dtype=np.float64), model_id=model_id))
    if not embeddings:
        raise ParseError(f"{path}: no vectors found")
    return embeddings


def write_vectors(path: Path | str, embeddings: Sequence[Embedding]) -> None:
    """Write embeddings as JSON Lines; reading them back is bit-exact."""
    lines = [json.dumps(e.tolist()) for e in embeddings]
    _atomic_write(Path(path), ("\n".join(lines) + "\n").encode("utf-8"))
