"""Add-alpha smoothed n-gram language models and cross-entropy-difference
scoring (in-domain vs. out-of-domain preference, summed over both sides for
the bilingual variant).

Conventions: natural-log nats per token; a single UNK type shared across
contexts; vocabulary frozen at training time. For order >= 2, sequences are
padded with (order-1) begin markers and one end marker, and the end marker is
a predicted event. Order-1 models use no boundary markers at all.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InputError

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"


class NGramLM:
    """Conditional token model P(w | context) with additive smoothing:

        P(w | c) = (count(c, w) + alpha) / (total(c) + alpha * (V + 1))

    where V is the vocabulary size and the +1 accounts for UNK. Probabilities
    over vocab plus UNK sum to one for every context.
    """

    def __init__(self, order: int, smoothing_alpha: float, vocab: frozenset[str]):
        if order < 1:
            raise ValueError(f"order must be >= 1, got {order}")
        if smoothing_alpha <= 0:
            raise ValueError(f"smoothing_alpha must be positive, got {smoothing_alpha}")
        self.order = order
        self.smoothing_alpha = smoothing_alpha
        self.vocab = vocab
        self.counts: dict[tuple[str, ...], dict[str, int]] = {}
        self.context_totals: dict[tuple[str, ...], int] = {}

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def _observe(self, context: tuple[str, ...], token: str) -> None:
        bucket = self.counts.setdefault(context, {})
        bucket[token] = bucket.get(token, 0) + 1
        self.context_totals[context] = self.context_totals.get(context, 0) + 1

    def _map_token(self, token: str) -> str:
        return token if token in self.vocab else UNK

    def _events(self, tokens: Sequence[str]) -> Iterable[tuple[tuple[str, ...], str]]:
        """(context, token) prediction events for one sequence, with boundary
        padding when the order calls for it. Context and event tokens are
        both mapped through the frozen vocabulary."""
        if self.order == 1:
            for token in tokens:
                yield (), self._map_token(token)
            return
        padded = [BOS] * (self.order - 1) + [self._map_token(t) for t in tokens] + [EOS]
        for i in range(self.order - 1, len(padded)):
            yield tuple(padded[i - self.order + 1 : i]), padded[i]

    def prob(self, context: tuple[str, ...], token: str) -> float:
        context = tuple(self._map_token(t) if t != BOS else t for t in context)
        token = self._map_token(token)
        count = self.counts.get(context, {}).get(token, 0)
        total = self.context_totals.get(context, 0)
        alpha = self.smoothing_alpha
        return (count + alpha) / (total + alpha * (self.vocab_size + 1))

    def sequence_log_prob(self, tokens: Sequence[str]) -> tuple[float, int]:
        """Sum of event log-probabilities and the number of events."""
        total = 0.0
        n = 0
        for context, token in self._events(tokens):
            count = self.counts.get(context, {}).get(token, 0)
            ctx_total = self.context_totals.get(context, 0)
            alpha = self.smoothing_alpha
            total += math.log((count + alpha) / (ctx_total + alpha * (self.vocab_size + 1)))
            n += 1
        return total, n


def train_ngram_lm(
    sequences: Iterable[Sequence[str]], order: int = 3, smoothing_alpha: float = 0.1
) -> NGramLM:
    """Train an add-alpha n-gram model on token sequences. For order >= 2 the
    end marker joins the vocabulary (it is a predicted event)."""
    sequences = [list(seq) for seq in sequences]
    vocab: set[str] = set()
    for seq in sequences:
        vocab.update(seq)
    if not vocab:
        raise ValueError("cannot train a language model on empty data")
    if order >= 2:
        vocab.add(EOS)
    # Marker strings are reserved: a literal begin marker or UNK in the data
    # folds into the UNK type rather than widening the vocabulary.
    vocab.discard(BOS)
    vocab.discard(UNK)
    lm = NGramLM(order=order, smoothing_alpha=smoothing_alpha, vocab=frozenset(vocab))
    for seq in sequences:
        for context, token in lm._events(seq):
            lm._observe(context, token)
    return lm


def cross_entropy(lm: NGramLM, tokens: Sequence[str]) -> float:
    """Per-event cross-entropy in nats: -(1/n) sum log P(w_i | context_i)."""
    if not tokens:
        raise ValueError("cross-entropy of an empty sequence is undefined")
    log_prob, n = lm.sequence_log_prob(tokens)
    return -log_prob / n


def moore_lewis(tokens: Sequence[str], lm_in: NGramLM, lm_out: NGramLM) -> float:
    """Cross-entropy difference H_out(x) - H_in(x); higher means the
    in-domain model prefers the sequence more (higher-is-better)."""
    if lm_in.order != lm_out.order:
        raise ValueError(
            f"in/out models must share order, got {lm_in.order} vs {lm_out.order}"
        )
    return cross_entropy(lm_out, tokens) - cross_entropy(lm_in, tokens)


def bilingual_delta(
    source_tokens: Sequence[str],
    target_tokens: Sequence[str],
    lms_in: tuple[NGramLM, NGramLM],
    lms_out: tuple[NGramLM, NGramLM],
) -> float:
    """Sum of the per-side cross-entropy differences, source plus target."""
    return moore_lewis(source_tokens, lms_in[0], lms_out[0]) + moore_lewis(
        target_tokens, lms_in[1], lms_out[1]
    )


def save_lm(lm: NGramLM, path: str) -> None:
    """Textual count dump: a JSON header line, then one [context, token,
    count] triple per line in sorted order (byte-deterministic)."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "kind": "pairselect-ngram-lm",
            "version": 1,
            "order": lm.order,
            "alpha": lm.smoothing_alpha,
            "vocab": sorted(lm.vocab),
        }
        fh.write(json.dumps(header, ensure_ascii=False, sort_keys=True) + "\n")
        rows = []
        for context, bucket in lm.counts.items():
            for token, count in bucket.items():
                rows.append([list(context), token, count])
        rows.sort()
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def load_lm(path: str) -> NGramLM:
    """Reload a model written by save_lm(); scores are bit-identical because
    only integer counts and the exact alpha are stored."""
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read language model {path}: {exc}") from exc
    with fh:
        try:
            header = json.loads(fh.readline())
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not a language model dump (bad header)") from exc
        if header.get("kind") != "pairselect-ngram-lm" or header.get("version") != 1:
            raise InputError(f"{path}: not a version-1 language model dump")
        lm = NGramLM(
            order=header["order"],
            smoothing_alpha=header["alpha"],
            vocab=frozenset(header["vocab"]),
        )
        for raw in fh:
            context, token, count = json.loads(raw)
            context = tuple(context)
            bucket = lm.counts.setdefault(context, {})
            bucket[token] = count
            lm.context_totals[context] = lm.context_totals.get(context, 0) + count
    return lm


@dataclass(frozen=True)
class DomainModels:
    """The four models of the bilingual setup, one in/out pair per side."""

    in_source: NGramLM
    in_target: NGramLM
    out_source: NGramLM
    out_target: NGramLM

    def delta(self, source_tokens: Sequence[str], target_tokens: Sequence[str]) -> float:
        return bilingual_delta(
            source_tokens,
            target_tokens,
            (self.in_source, self.in_target),
            (self.out_source, self.out_target),
        )
