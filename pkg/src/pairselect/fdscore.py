"""Frequency-distance scoring: distance of each pair's tf-idf vector from
the corpus centroid. Farther vectors are more diverse and rank higher."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .corpus import ParallelCorpus
from .tfidf import BOTH, SparseVector, VocabIndex, vectorize

EUCLIDEAN = "euclidean"
COSINE = "cosine"
METRICS = (EUCLIDEAN, COSINE)


@dataclass(frozen=True)
class Centroid:
    """Componentwise mean of a set of sparse vectors (absent entries count
    as zero)."""

    weights: dict[int, float]
    member_count: int
    norm: float
    norm_sq: float


def centroid(vectors: Iterable[SparseVector]) -> Centroid:
    sums: dict[int, float] = {}
    count = 0
    for vec in vectors:
        count += 1
        for i, w in vec.entries.items():
            sums[i] = sums.get(i, 0.0) + w
    if count == 0:
        raise ValueError("centroid of an empty vector collection is undefined")
    weights = {i: s / count for i, s in sums.items()}
    norm_sq = math.fsum(w * w for w in weights.values())
    return Centroid(
        weights=weights, member_count=count, norm=math.sqrt(norm_sq), norm_sq=norm_sq
    )


def fd_score(vector: SparseVector, center: Centroid) -> float:
    """Euclidean distance between a vector and the centroid.

    Computed over the vector's own entries only:
        |v - c|^2 = sum_{i in v} (v_i - c_i)^2 + (|c|^2 - sum_{i in v} c_i^2)
    so scoring a whole corpus stays linear in token count rather than in
    corpus vocabulary. fsum keeps the residual exactly zero when the vector
    covers the centroid's support with equal values (a centroid member at
    the centroid scores exactly 0).
    """
    weights = center.weights
    diff_sq = math.fsum(
        (w - weights.get(i, 0.0)) ** 2 for i, w in vector.entries.items()
    )
    covered_sq = math.fsum(
        weights[i] ** 2 for i in vector.entries if i in weights
    )
    total = diff_sq + (center.norm_sq - covered_sq)
    return math.sqrt(total) if total > 0.0 else 0.0


def cosine_fd_score(vector: SparseVector, center: Centroid) -> float:
    """Cosine distance (1 - cos) alternative. A zero-norm vector or centroid
    has no direction; such cases score 1.0 (the orthogonal distance)."""
    if vector.norm == 0.0 or center.norm == 0.0:
        return 1.0
    dot = sum(w * center.weights.get(i, 0.0) for i, w in vector.entries.items())
    return 1.0 - dot / (vector.norm * center.norm)


def fd_scores(
    corpus: ParallelCorpus, side: str = BOTH, metric: str = EUCLIDEAN
) -> dict[int, float]:
    """Distance-from-centroid score for every pair in the corpus."""
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    vocab = VocabIndex.build(corpus, side)
    vectors = {pair.id: vectorize(corpus, pair, side, vocab) for pair in corpus}
    if not vectors:
        return {}
    center = centroid(vectors.values())
    score = fd_score if metric == EUCLIDEAN else cosine_fd_score
    return {pair_id: score(vec, center) for pair_id, vec in vectors.items()}
