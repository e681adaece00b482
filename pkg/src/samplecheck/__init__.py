"""samplecheck: stability-based verification of generative-model outputs.

Sample a prompt k times, embed each whole reply, score all embedding pairs,
and reduce the similarity matrix to a confidence verdict. Ships the
comparison baselines (greedy token matching, sentence-level self-consistency,
judge prompting), dataset evaluation protocols, and an analytical depth/work
cost model for comparing verification schemes.
"""

from .errors import SampleCheckError
from .pipeline import (
    EmbedderConfig,
    GeneratorConfig,
    SampleSet,
    VerificationReport,
    chunk_document,
    ingest_vectors,
    verify,
)
from .providers import GenerationRequest, ProviderConfig, embed_text, generate_samples, mock_embed
from .scorematrix import (
    ConfidenceThresholds,
    MatrixSummary,
    SimilarityMatrix,
    build_matrix,
    heatmap_data,
    summarize,
)
from .vectors import Embedding, cosine, pearson, spearman

__all__ = [
    "ConfidenceThresholds",
    "EmbedderConfig",
    "Embedding",
    "GenerationRequest",
    "GeneratorConfig",
    "MatrixSummary",
    "ProviderConfig",
    "SampleCheckError",
    "SampleSet",
    "SimilarityMatrix",
    "VerificationReport",
    "build_matrix",
    "chunk_document",
    "cosine",
    "embed_text",
    "generate_samples",
    "heatmap_data",
    "ingest_vectors",
    "mock_embed",
    "pearson",
    "spearman",
    "summarize",
    "verify",
]

__version__ = "0.1.0"
