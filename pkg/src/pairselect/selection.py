"""Budgeted top-k selection over score columns, plus the seeded random
baseline.

Ranking is a stable sort on (score, id): score descending for higher-is-
better columns, ascending for lower-is-better, ties always broken by
ascending pair id. Random sampling uses an in-repo counter-based generator
(splitmix64) with an unbiased partial Fisher-Yates shuffle, so the same
(ids, k, seed) triple selects the same subset on every platform.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import InputError
from .external import DIRECTIONS, HIGHER_BETTER

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """Standard splitmix64 stream: pure 64-bit integer arithmetic, identical
    output everywhere."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling (no modulo bias)."""
        if n <= 0:
            raise ValueError(f"below() needs n >= 1, got {n}")
        limit = ((1 << 64) // n) * n
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n


@dataclass(frozen=True)
class SelectionResult:
    """A named selection: the chosen ids (and optionally the full ranking
    they are a prefix of)."""

    method_name: str
    k: int
    selected: tuple[int, ...]
    ranking: tuple[int, ...] | None = None
    seed: int | None = None
    direction: str | None = None
    flags: dict = field(default_factory=dict)


def _check_coverage(scores: Mapping[int, float], ids: Sequence[int]) -> None:
    expected = set(ids)
    have = set(scores)
    if expected != have:
        missing = sorted(expected - have)[:10]
        extra = sorted(have - expected)[:10]
        raise InputError(
            f"score column does not cover the corpus (missing {missing}, unknown {extra})"
        )


def rank(
    scores: Mapping[int, float],
    direction: str,
    ids: Sequence[int] | None = None,
) -> list[int]:
    """Full ranking of ids by score in the declared direction, ties by
    ascending id. When `ids` is given the column must cover it exactly."""
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    if ids is not None:
        _check_coverage(scores, ids)
    if direction == HIGHER_BETTER:
        return sorted(scores, key=lambda i: (-scores[i], i))
    return sorted(scores, key=lambda i: (scores[i], i))


def top_k(
    ranking: Sequence[int],
    k: int,
    method_name: str = "",
    direction: str | None = None,
    flags: dict | None = None,
) -> SelectionResult:
    """First min(k, N) ids of a ranking; k beyond N simply takes everything."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    return SelectionResult(
        method_name=method_name,
        k=k,
        selected=tuple(ranking[:k]),
        ranking=tuple(ranking),
        direction=direction,
        flags=dict(flags or {}),
    )


def select_top_k(
    scores: Mapping[int, float],
    direction: str,
    k: int,
    method_name: str = "",
    ids: Sequence[int] | None = None,
    flags: dict | None = None,
    emit_ranking: bool = False,
) -> SelectionResult:
    """Budgeted selection without materializing the full ranking: a heap
    keeps the best min(k, N) in O(N log k). With emit_ranking the full sort
    runs instead and is kept on the result."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if emit_ranking:
        full = rank(scores, direction, ids)
        return top_k(full, k, method_name, direction, flags)
    if ids is not None:
        _check_coverage(scores, ids)
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    if direction == HIGHER_BETTER:
        best = heapq.nsmallest(k, scores, key=lambda i: (-scores[i], i))
    else:
        best = heapq.nsmallest(k, scores, key=lambda i: (scores[i], i))
    return SelectionResult(
        method_name=method_name,
        k=k,
        selected=tuple(best),
        ranking=None,
        direction=direction,
        flags=dict(flags or {}),
    )


def random_sample(
    ids: Sequence[int],
    k: int,
    seed: int,
    method_name: str = "random",
    emit_ranking: bool = False,
) -> SelectionResult:
    """Uniform sample of k ids without replacement, deterministic in
    (ids, k, seed). Sampling order: partial Fisher-Yates over the ids in
    their given order."""
    n = len(ids)
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if k > n:
        raise ValueError(f"cannot sample {k} from {n} ids")
    pool = list(ids)
    rng = SplitMix64(seed)
    upto = n if emit_ranking else min(k, max(n - 1, 0))
    for i in range(upto):
        j = i + rng.below(n - i)
        pool[i], pool[j] = pool[j], pool[i]
    return SelectionResult(
        method_name=method_name,
        k=k,
        selected=tuple(pool[:k]),
        ranking=tuple(pool) if emit_ranking else None,
        seed=seed,
    )


def save_selection(result: SelectionResult, path: str) -> None:
    """JSONL: a metadata header object, then one selected id per line."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "kind": "pairselect-selection",
            "version": 1,
            "method": result.method_name,
            "k": result.k,
            "seed": result.seed,
            "direction": result.direction,
            "flags": result.flags,
            "selected_count": len(result.selected),
        }
        fh.write(json.dumps(header, ensure_ascii=False, sort_keys=True) + "\n")
        for pair_id in result.selected:
            fh.write(f"{pair_id}\n")


def load_selection(path: str) -> SelectionResult:
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read selection file {path}: {exc}") from exc
    with fh:
        try:
            header = json.loads(fh.readline())
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not a selection file (bad header)") from exc
        if header.get("kind") != "pairselect-selection" or header.get("version") != 1:
            raise InputError(f"{path}: not a version-1 selection file")
        selected = []
        for raw in fh:
            raw = raw.strip()
            if raw:
                selected.append(int(raw))
        if len(selected) != header.get("selected_count"):
            raise InputError(
                f"{path}: header says {header.get('selected_count')} ids, "
                f"found {len(selected)}"
            )
    return SelectionResult(
        method_name=header["method"],
        k=header["k"],
        selected=tuple(selected),
        seed=header.get("seed"),
        direction=header.get("direction"),
        flags=header.get("flags") or {},
    )
