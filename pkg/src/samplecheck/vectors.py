"""Similarity and correlation kernels over dense vectors.

All kernels run in double precision, reject non-finite input outright, and
clamp their result to [-1, 1] to absorb floating-point rounding. Degenerate
input (zero vectors, constant sequences) raises a typed error instead of
silently returning 0, because a silent 0 would corrupt downstream matrix
summaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import SampleCheckError


class DimensionMismatch(SampleCheckError):
    """The two vectors do not share the same dimensionality."""


class ZeroVector(SampleCheckError):
    """Cosine similarity is undefined for a vector with zero norm."""


class ConstantVector(SampleCheckError):
    """Pearson correlation is undefined when a sequence has zero variance."""


class LengthMismatch(SampleCheckError):
    """The two sequences do not have the same length."""


class ConstantSequence(SampleCheckError):
    """Rank correlation is undefined when all values in a sequence are equal."""


class NonFiniteInput(SampleCheckError):
    """Input contains NaN or infinite values; these are never propagated."""


@dataclass(frozen=True, eq=False)
class Embedding:
    """A dense real vector representing one whole item (answer, image, ...).

    values is stored as a read-only float64 array; dim always equals the
    number of values and every value is finite.
    """

    values: np.ndarray
    model_id: str = field(default="unknown")

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("embedding values must be a non-empty 1-D sequence")
        if not np.isfinite(arr).all():
            raise NonFiniteInput("embedding values must be finite (no NaN/Inf)")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.dim

    def tolist(self) -> list[float]:
        return self.values.tolist()


VectorLike = Embedding | Sequence[float] | np.ndarray


def _as_array(v: VectorLike) -> np.ndarray:
    if isinstance(v, Embedding):
        return v.values
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("expected a non-empty 1-D sequence of reals")
    if not np.isfinite(arr).all():
        raise NonFiniteInput("input contains NaN or infinite values")
    return arr


def _clamp(x: float) -> float:
    return max(-1.0, min(1.0, x))


def cosine(a: VectorLike, b: VectorLike) -> float:
    """Cosine similarity of two equal-dimension vectors, clamped to [-1, 1].

    Each vector is pre-scaled by its largest magnitude so the squared norms
    stay in [1, dim] regardless of input scale (no under- or overflow).
    Raises DimensionMismatch on unequal dims and ZeroVector when either
    argument has zero norm.
    """
    x = _as_array(a)
    y = _as_array(b)
    if x.size != y.size:
        raise DimensionMismatch(f"dims differ: {x.size} vs {y.size}")
    mx = float(np.max(np.abs(x)))
    my = float(np.max(np.abs(y)))
    if mx == 0.0 or my == 0.0:
        raise ZeroVector("cosine similarity is undefined for zero-norm vectors")
    x = x / mx
    y = y / my
    dot = float(np.dot(x, y))
    nx = float(np.dot(x, x))
    ny = float(np.dot(y, y))
    return _clamp(dot / float(np.sqrt(nx * ny)))


def pearson(a: VectorLike, b: VectorLike) -> float:
    """Sample Pearson correlation of two index-aligned sequences.

    Requires dim >= 2; raises ConstantVector when either sequence has zero
    variance (correlation undefined).
    """
    x = _as_array(a)
    y = _as_array(b)
    if x.size != y.size:
        raise DimensionMismatch(f"dims differ: {x.size} vs {y.size}")
    if x.size < 2:
        raise DimensionMismatch("pearson needs at least 2 values per sequence")
    xc = x - x.mean()
    yc = y - y.mean()
    mx = float(np.max(np.abs(xc)))
    my = float(np.max(np.abs(yc)))
    if mx == 0.0 or my == 0.0:
        raise ConstantVector("pearson correlation is undefined for a constant sequence")
    xc = xc / mx
    yc = yc / my
    sxx = float(np.dot(xc, xc))
    syy = float(np.dot(yc, yc))
    return _clamp(float(np.dot(xc, yc)) / float(np.sqrt(sxx * syy)))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the average rank of their run."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        # positions i..j (0-based) share ranks i+1..j+1
        avg = (i + j) / 2.0 + 1.0
        ranks[order[i : j + 1]] = avg
        i = j + 1
    return ranks


def spearman(xs: Sequence[float] | np.ndarray, ys: Sequence[float] | np.ndarray) -> float:
    """Spearman rank correlation: Pearson correlation of average-tie ranks.

    Raises LengthMismatch on unequal lengths and ConstantSequence when either
    sequence has all-equal values.
    """
    x = _as_array(xs)
    y = _as_array(ys)
    if x.size != y.size:
        raise LengthMismatch(f"lengths differ: {x.size} vs {y.size}")
    if x.size < 2:
        raise LengthMismatch("spearman needs at least 2 values per sequence")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ConstantSequence("rank correlation is undefined for an all-equal sequence")
    return pearson(_average_ranks(x), _average_ranks(y))
