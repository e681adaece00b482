"""Reference verifiers built on token- and sentence-level comparisons.

These are the classical comparison points for whole-answer verification:
greedy token matching over token embeddings (with optional idf weighting),
sentence-level self-consistency against sampled documents, and
contradiction-probability averaging via a pluggable NLI provider. Token
embeddings are caller-supplied (or produced by any embedder); no encoder
model is bundled.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from ..errors import SampleCheckError
from ..providers import ProviderConfig, _post_json
from ..vectors import Embedding, cosine


class EmptySequence(SampleCheckError):
    """Token sequences must be nonempty."""


class EmptySample(SampleCheckError):
    """Every sampled document must contain at least one sentence."""


class OutOfRangeScore(SampleCheckError):
    """An NLI provider returned a contradiction score outside [0, 1]."""


@dataclass(frozen=True)
class TokenEmbeddingSeq:
    """A token sequence with one embedding per token and optional idf weights."""

    tokens: tuple[str, ...]
    vectors: tuple[Embedding, ...]
    idf: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if not self.tokens:
            raise EmptySequence("token sequence must be nonempty")
        if len(self.tokens) != len(self.vectors):
            raise ValueError("tokens and vectors must align one-to-one")
        dims = {v.dim for v in self.vectors}
        if len(dims) != 1:
            raise ValueError(f"token vectors must share one dim, got {sorted(dims)}")
        if self.idf is not None:
            if len(self.idf) != len(self.tokens):
                raise ValueError("idf weights must align with tokens")
            if any(w < 0 for w in self.idf):
                raise ValueError("idf weights must be non-negative")
            if math.fsum(self.idf) == 0.0:
                raise ValueError("idf weights must not all be zero")

    @property
    def dim(self) -> int:
        return self.vectors[0].dim


def _weighted_mean(values: Sequence[float], weights: Sequence[float] | None) -> float:
    if weights is None:
        return math.fsum(values) / len(values)
    return math.fsum(w * v for w, v in zip(weights, values)) / math.fsum(weights)


def _greedy_side(src: TokenEmbeddingSeq, dst: TokenEmbeddingSeq) -> float:
    """For each src token, the max cosine to any dst token; idf-weighted mean."""
    maxima = [
        max(cosine(sv, dv) for dv in dst.vectors)
        for sv in src.vectors
    ]
    return _weighted_mean(maxima, src.idf)


def bertscore_greedy(
    candidate: TokenEmbeddingSeq, reference: TokenEmbeddingSeq
) -> tuple[float, float, float]:
    """Greedy-matching precision/recall/F1 over token embedding pairs.

    Recall takes, for each reference token, the maximum similarity to any
    candidate token, then averages (idf-weighted when weights are present);
    precision swaps the roles. F1 is the harmonic mean, defined as 0 when
    P + R == 0.
    """
    if candidate.dim != reference.dim:
        raise ValueError(f"dims differ: candidate {candidate.dim} vs reference {reference.dim}")
    precision = _greedy_side(candidate, reference)
    recall = _greedy_side(reference, candidate)
    denom = precision + recall
    f1 = 0.0 if denom == 0.0 else 2.0 * precision * recall / denom
    return precision, recall, f1


def selfcheck_bert(
    reply_sentences: Sequence[TokenEmbeddingSeq],
    sample_docs: Sequence[Sequence[TokenEmbeddingSeq]],
) -> list[float]:
    """Sentence-level consistency against k sampled documents.

    Per reply sentence: for each sample, the maximum greedy-matching F1
    against any sentence of that sample; then the mean over the k samples.
    """
    if not sample_docs:
        raise EmptySample("need at least one sampled document")
    for idx, doc in enumerate(sample_docs):
        if not doc:
            raise EmptySample(f"sample {idx} has no sentences")
    scores: list[float] = []
    for sentence in reply_sentences:
        per_sample = [
            max(bertscore_greedy(sentence, other)[2] for other in doc)
            for doc in sample_docs
        ]
        scores.append(math.fsum(per_sample) / len(per_sample))
    return scores


NliProvider = Callable[[str, str], float]


def selfcheck_nli(
    reply_sentences: Sequence[str],
    samples: Sequence[str],
    nli: NliProvider,
) -> list[float]:
    """Mean contradiction probability of each sentence across k samples.

    nli(premise, hypothesis) must return a probability in [0, 1]; the premise
    is the sampled document and the hypothesis is the sentence under check.
    """
    if not samples:
        raise EmptySample("need at least one sample")
    scores: list[float] = []
    for sentence in reply_sentences:
        values = []
        for sample in samples:
            value = float(nli(sample, sentence))
            if not 0.0 <= value <= 1.0:
                raise OutOfRangeScore(f"nli returned {value}, expected [0, 1]")
            values.append(value)
        scores.append(math.fsum(values) / len(values))
    return scores


def http_nli_provider(cfg: ProviderConfig) -> NliProvider:
    """NLI provider speaking {premise, hypothesis} -> {contradiction} JSON."""

    def nli(premise: str, hypothesis: str) -> float:
        body = _post_json(cfg, "", {"premise": premise, "hypothesis": hypothesis})
        value = body.get("contradiction")
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise OutOfRangeScore("nli endpoint did not return a numeric 'contradiction'")
        return float(value)

    return nli


_SENT_SPLIT = re.compile(r"(?<=[.!?])\s+")


def split_sentences(text: str) -> list[str]:
    """Split on '.', '!' or '?' followed by whitespace; keeps the terminator."""
    return [s for s in (_SENT_SPLIT.split(text.strip())) if s]


def idf_weights(
    tokens: Sequence[str], corpus: Sequence[Sequence[str]]
) -> tuple[float, ...]:
    """Per-token idf over a tokenized corpus, with add-one smoothing.

    idf(t) = ln((N + 1) / (df(t) + 1)) where df counts documents containing
    the token; the smoothing keeps unseen tokens finite and positive.
    """
    if not corpus:
        raise ValueError("idf corpus must be nonempty")
    n_docs = len(corpus)
    doc_sets = [set(doc) for doc in corpus]
    weights = []
    for token in tokens:
        df = sum(1 for doc in doc_sets if token in doc)
        weights.append(math.log((n_docs + 1) / (df + 1)))
    return tuple(weights)


def idf_from_mapping(tokens: Sequence[str], table: Mapping[str, float]) -> tuple[float, ...]:
    """Look up caller-precomputed idf values; unknown tokens get weight 0."""
    return tuple(float(table.get(t, 0.0)) for t in tokens)
