"""TF-IDF and IDF sentence scoring over a parallel corpus.

The document unit is one side of one sentence pair; natural log throughout.
Out-of-vocabulary tokens score with a document frequency of 1, so held-out
text can be scored against training statistics.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .corpus import ParallelCorpus, SentencePair, SOURCE, TARGET

BOTH = "both"
SIDES = (SOURCE, TARGET, BOTH)


def _require_side(side: str, allow_both: bool = True) -> None:
    allowed = SIDES if allow_both else (SOURCE, TARGET)
    if side not in allowed:
        raise ValueError(f"side must be one of {allowed}, got {side!r}")


def idf(corpus: ParallelCorpus, token: str, side: str) -> float:
    """log(N / n_w) with n_w := 1 for tokens unseen on this side."""
    _require_side(side, allow_both=False)
    n = corpus.n_docs
    if n == 0:
        raise ValueError("idf is undefined on an empty corpus")
    n_w = corpus.doc_freq(side).get(token, 1)
    return math.log(n / n_w)


def tfidf(corpus: ParallelCorpus, pair: SentencePair, side: str, token: str) -> float:
    """Raw occurrence count on the pair's side times idf."""
    _require_side(side, allow_both=False)
    if corpus.n_docs == 0:
        raise ValueError("tfidf is undefined on an empty corpus")
    tf = pair.tokens(side).count(token)
    if tf == 0:
        return 0.0
    return tf * idf(corpus, token, side)


def _side_mean_tfidf(corpus: ParallelCorpus, pair: SentencePair, side: str) -> float:
    tokens = pair.tokens(side)
    if not tokens:
        return 0.0
    counts = Counter(tokens)
    # Each of the c occurrences of w contributes tf*idf = c*idf(w).
    total = sum(c * c * idf(corpus, w, side) for w, c in counts.items())
    return total / len(tokens)


def mean_tfidf(corpus: ParallelCorpus, pair: SentencePair, side: str = BOTH) -> float:
    """Mean tfidf over the side's token occurrences; "both" averages the two
    side means."""
    _require_side(side)
    if side == BOTH:
        return 0.5 * (
            _side_mean_tfidf(corpus, pair, SOURCE) + _side_mean_tfidf(corpus, pair, TARGET)
        )
    return _side_mean_tfidf(corpus, pair, side)


def _side_avg_idf(corpus: ParallelCorpus, pair: SentencePair, side: str) -> float:
    tokens = pair.tokens(side)
    if not tokens:
        return 0.0
    return sum(idf(corpus, w, side) for w in tokens) / len(tokens)


def avg_idf(corpus: ParallelCorpus, pair: SentencePair, side: str = BOTH) -> float:
    """Mean idf over token occurrences (lexical-richness proxy)."""
    _require_side(side)
    if side == BOTH:
        return 0.5 * (
            _side_avg_idf(corpus, pair, SOURCE) + _side_avg_idf(corpus, pair, TARGET)
        )
    return _side_avg_idf(corpus, pair, side)


@dataclass(frozen=True)
class SparseVector:
    """Sparse tf-idf vector keyed by token id, with a cached L2 norm.
    Zero-weight entries are never stored."""

    entries: dict[int, float]
    norm: float

    @classmethod
    def from_entries(cls, entries: dict[int, float]) -> "SparseVector":
        kept = {i: w for i, w in entries.items() if w != 0.0}
        return cls(entries=kept, norm=math.sqrt(sum(w * w for w in kept.values())))

    def dot(self, other: "SparseVector") -> float:
        a, b = self.entries, other.entries
        if len(b) < len(a):
            a, b = b, a
        return sum(w * b[i] for i, w in a.items() if i in b)


class VocabIndex:
    """Deterministic token-id assignment: first appearance in corpus order.

    For side "both", source and target occurrences of the same surface token
    are distinct dimensions (their document frequencies differ).
    """

    def __init__(self, side: str, ids: dict[tuple[str, str], int]):
        _require_side(side)
        self.side = side
        self.ids = ids

    @classmethod
    def build(cls, corpus: ParallelCorpus, side: str = BOTH) -> "VocabIndex":
        _require_side(side)
        sides = (SOURCE, TARGET) if side == BOTH else (side,)
        ids: dict[tuple[str, str], int] = {}
        for pair in corpus:
            for s in sides:
                for token in pair.tokens(s):
                    key = (s, token)
                    if key not in ids:
                        ids[key] = len(ids)
        return cls(side, ids)

    def __len__(self) -> int:
        return len(self.ids)

    def id_of(self, side: str, token: str) -> int | None:
        return self.ids.get((side, token))


def vectorize(
    corpus: ParallelCorpus,
    pair: SentencePair,
    side: str = BOTH,
    vocab: VocabIndex | None = None,
) -> SparseVector:
    """TF-IDF sparse vector for a pair: one entry per distinct in-vocabulary
    token with nonzero weight."""
    _require_side(side)
    if vocab is None:
        vocab = VocabIndex.build(corpus, side)
    elif vocab.side != side:
        raise ValueError(f"vocab was built for side {vocab.side!r}, not {side!r}")
    sides = (SOURCE, TARGET) if side == BOTH else (side,)
    entries: dict[int, float] = {}
    for s in sides:
        for token, count in Counter(pair.tokens(s)).items():
            token_id = vocab.id_of(s, token)
            if token_id is None:
                continue
            weight = count * idf(corpus, token, s)
            if weight != 0.0:
                entries[token_id] = weight
    return SparseVector.from_entries(entries)
