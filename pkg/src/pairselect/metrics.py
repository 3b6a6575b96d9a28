"""Reference-based quality metrics: translation edit rate and corpus BLEU.

Both operate on token sequences as produced by the corpus tokenizer; no
re-tokenization happens here.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

# Shift search limits, after the usual practical TER settings: greedy
# best-first block moves, at most this many applied shifts, blocks no longer
# than this many tokens.
MAX_SHIFTS = 10
MAX_BLOCK = 10

BLEU_ORDER = 4
BLEU_FLOOR = 1e-9


def levenshtein(a: Sequence[str], b: Sequence[str]) -> int:
    """Uniform-cost edit distance (insert/delete/substitute)."""
    if len(a) < len(b):
        a, b = b, a
    # b is the shorter row; classic two-row DP.
    prev = list(range(len(b) + 1))
    for i, tok_a in enumerate(a, start=1):
        cur = [i]
        for j, tok_b in enumerate(b, start=1):
            if tok_a == tok_b:
                cur.append(prev[j - 1])
            else:
                cur.append(1 + min(prev[j - 1], prev[j], cur[-1]))
        prev = cur
    return prev[-1]


def _edit_counts(hyp: Sequence[str], ref: Sequence[str]) -> tuple[int, int, int]:
    """(insertions, deletions, substitutions) along one minimal alignment of
    hyp into ref. Insertions add reference tokens missing from the
    hypothesis; deletions drop hypothesis tokens."""
    m, n = len(hyp), len(ref)
    dist = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        dist[i][0] = i
    for j in range(n + 1):
        dist[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            if hyp[i - 1] == ref[j - 1]:
                dist[i][j] = dist[i - 1][j - 1]
            else:
                dist[i][j] = 1 + min(dist[i - 1][j - 1], dist[i - 1][j], dist[i][j - 1])
    ins = dels = subs = 0
    i, j = m, n
    while i > 0 or j > 0:
        if i > 0 and j > 0 and hyp[i - 1] == ref[j - 1]:
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and dist[i][j] == dist[i - 1][j - 1] + 1:
            subs += 1
            i, j = i - 1, j - 1
        elif i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return ins, dels, subs


@dataclass(frozen=True)
class EditScript:
    """Edit counts that turn a hypothesis into its reference."""

    insertions: int
    deletions: int
    substitutions: int
    shifts: int

    @property
    def total(self) -> int:
        return self.insertions + self.deletions + self.substitutions + self.shifts


def _lev_bounded(a: Sequence[str], b: Sequence[str], limit: int) -> int:
    """min(levenshtein(a, b), limit). Rows whose minimum reaches the limit
    cannot recover (values never decrease along an edit path), so the DP
    aborts early."""
    if abs(len(a) - len(b)) >= limit:
        return limit
    prev = list(range(len(b) + 1))
    for i, tok_a in enumerate(a, start=1):
        cur = [i]
        row_min = i
        for j, tok_b in enumerate(b, start=1):
            if tok_a == tok_b:
                v = prev[j - 1]
            else:
                v = prev[j - 1]
                if prev[j] < v:
                    v = prev[j]
                if cur[-1] < v:
                    v = cur[-1]
                v += 1
            cur.append(v)
            if v < row_min:
                row_min = v
        if row_min >= limit:
            return limit
        prev = cur
    return prev[-1] if prev[-1] < limit else limit


def _reorder_floor(hyp: Sequence[str], ref: Sequence[str]) -> int:
    """Edits that no amount of reordering can avoid. Shifts preserve the
    hypothesis token multiset, so every shifted variant still needs at least
    this many insert/delete/substitute edits."""
    overlap = sum((Counter(hyp) & Counter(ref)).values())
    return max(len(hyp), len(ref)) - overlap


def _ref_block_index(ref: Sequence[str]) -> dict[tuple[str, ...], list[int]]:
    """Positions of every contiguous reference block up to MAX_BLOCK long."""
    index: dict[tuple[str, ...], list[int]] = {}
    n = len(ref)
    for start in range(n):
        for length in range(1, min(MAX_BLOCK, n - start) + 1):
            index.setdefault(tuple(ref[start : start + length]), []).append(start)
    return index


def _best_shift(
    hyp: list[str],
    ref: Sequence[str],
    block_index: dict[tuple[str, ...], list[int]],
    current: int,
    floor: int,
) -> tuple[list[str], int] | None:
    """Greedy step: the block move that lowers the remaining edit distance the
    most. A move is only worth taking when the saved edits exceed the one
    edit the shift itself costs. Ties resolve to the first candidate in scan
    order, keeping the search deterministic."""
    best: tuple[list[str], int] | None = None
    best_dist = current - 1  # strict improvement after paying for the shift
    m = len(hyp)
    for start in range(m):
        for length in range(1, min(MAX_BLOCK, m - start) + 1):
            block = tuple(hyp[start : start + length])
            positions = block_index.get(block)
            if not positions:
                continue
            rest = hyp[:start] + hyp[start + length :]
            for pos in positions:
                dest = min(pos, len(rest))
                if dest == start:
                    continue
                candidate = rest[:dest] + list(block) + rest[dest:]
                dist = _lev_bounded(candidate, ref, best_dist)
                if dist < best_dist:
                    best = (candidate, dist)
                    best_dist = dist
                    if best_dist <= floor:
                        return best  # nothing can beat the content floor
    return best


def _shift_search(
    hyp: Sequence[str], ref: Sequence[str]
) -> tuple[list[str], int, int]:
    """(shifted hypothesis, shifts applied, final edit distance)."""
    current_hyp = list(hyp)
    current_dist = levenshtein(current_hyp, ref)
    shifts = 0
    if current_dist <= 1:
        return current_hyp, shifts, current_dist
    floor = _reorder_floor(current_hyp, ref)
    block_index: dict[tuple[str, ...], list[int]] | None = None
    while shifts < MAX_SHIFTS and current_dist - floor >= 2:
        if block_index is None:
            block_index = _ref_block_index(ref)
        step = _best_shift(current_hyp, ref, block_index, current_dist, floor)
        if step is None:
            break
        current_hyp, current_dist = step
        shifts += 1
        if current_dist <= 1:
            break
    return current_hyp, shifts, current_dist


def ter_script(hypothesis: Sequence[str], reference: Sequence[str]) -> EditScript:
    """Full edit breakdown for the shift-search TER approximation."""
    if not reference:
        raise ValueError("TER is undefined for an empty reference")
    shifted, shifts, _ = _shift_search(hypothesis, reference)
    ins, dels, subs = _edit_counts(shifted, reference)
    return EditScript(insertions=ins, deletions=dels, substitutions=subs, shifts=shifts)


def ter(hypothesis: Sequence[str], reference: Sequence[str]) -> float:
    """Edits (including shifts) divided by reference length; lower is
    cleaner. Can exceed 1 for long bad hypotheses."""
    if not reference:
        raise ValueError("TER is undefined for an empty reference")
    _, shifts, dist = _shift_search(hypothesis, reference)
    return (shifts + dist) / len(reference)


def _ngram_counts(tokens: Sequence[str], order: int) -> Counter:
    return Counter(
        tuple(tokens[i : i + order]) for i in range(len(tokens) - order + 1)
    )


def corpus_bleu(
    hypotheses: Sequence[Sequence[str]], references: Sequence[Sequence[str]]
) -> float:
    """Corpus-level BLEU in [0, 100]: geometric mean of modified 1..4-gram
    precisions with the brevity penalty, counts aggregated over the corpus.

    A zero unigram precision yields exactly 0.0; zero counts at higher orders
    are floored at 1e-9 so a single missing 4-gram does not zero the score.
    """
    if len(hypotheses) != len(references):
        raise ValueError(
            f"hypothesis/reference length mismatch: {len(hypotheses)} vs {len(references)}"
        )
    if not hypotheses:
        raise ValueError("corpus BLEU needs at least one sentence pair")
    for ref in references:
        if not ref:
            raise ValueError("corpus BLEU references must be non-empty")

    matched = [0] * BLEU_ORDER
    total = [0] * BLEU_ORDER
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, BLEU_ORDER + 1):
            hyp_counts = _ngram_counts(hyp, n)
            if not hyp_counts:
                continue
            ref_counts = _ngram_counts(ref, n)
            total[n - 1] += sum(hyp_counts.values())
            matched[n - 1] += sum(
                min(count, ref_counts[gram]) for gram, count in hyp_counts.items()
            )

    if hyp_len == 0 or total[0] == 0 or matched[0] == 0:
        return 0.0
    log_sum = 0.0
    orders = 0
    for n in range(BLEU_ORDER):
        if total[n] == 0:
            # No n-grams of this order exist in the corpus (all sentences
            # shorter than n): the order contributes nothing rather than a
            # penalty, so a self-match of short sentences still scores 100.
            continue
        precision = matched[n] / total[n] if matched[n] > 0 else BLEU_FLOOR
        log_sum += math.log(precision)
        orders += 1
    brevity = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * brevity * math.exp(log_sum / orders)
