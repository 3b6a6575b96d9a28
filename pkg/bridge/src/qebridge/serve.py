"""The protocol loop: batch requests from stdin, answer on stdout."""

from __future__ import annotations

import json
import math
import sys

from .config import BridgeConfig
from .models import ScoreError


class ProtocolViolation(Exception):
    """The client sent something that is not a valid request."""


def _parse_request(line: str) -> tuple[int, str, str]:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolViolation(f"request is not JSON: {line[:200]!r}") from exc
    if (
        not isinstance(obj, dict)
        or not isinstance(obj.get("id"), int)
        or not isinstance(obj.get("src"), str)
        or not isinstance(obj.get("tgt"), str)
    ):
        raise ProtocolViolation(f"request must be {{id, src, tgt}}: {line[:200]!r}")
    return obj["id"], obj["src"], obj["tgt"]


def _score_with_isolation(model, pairs):
    """Score a batch; if the batch fails, retry item by item so one bad pair
    does not take down its neighbours. Yields (score, error) per pair."""
    try:
        scores = model.score_batch(pairs)
        if len(scores) != len(pairs):
            raise ScoreError(
                f"model returned {len(scores)} scores for {len(pairs)} pairs"
            )
        return [(score, None) for score in scores]
    except ScoreError:
        results = []
        for pair in pairs:
            try:
                (score,) = model.score_batch([pair])
                results.append((score, None))
            except ScoreError as exc:
                results.append((None, str(exc)))
        return results


def serve(config: BridgeConfig, model, stdin=None, stdout=None) -> int:
    """Run until stdin closes. Every request gets exactly one response, in
    request order, flushed batch by batch; returns the exit code."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    lo, hi = config.declared_range if config.declared_range else (None, None)

    batch: list[tuple[int, str, str]] = []

    def flush_batch():
        if not batch:
            return
        pairs = [(src, tgt) for _, src, tgt in batch]
        for (request_id, _, _), (score, error) in zip(
            batch, _score_with_isolation(model, pairs)
        ):
            if score is not None and not math.isfinite(score):
                score, error = None, f"non-finite model output for id {request_id}"
            if score is not None and lo is not None and not lo <= score <= hi:
                score, error = (
                    None,
                    f"score {score} outside declared range [{lo}, {hi}]",
                )
            if error is None:
                response = {"id": request_id, "score": score}
            else:
                response = {"id": request_id, "score": None, "error": error}
            stdout.write(json.dumps(response, ensure_ascii=False) + "\n")
        batch.clear()
        stdout.flush()

    for line in stdin:
        line = line.strip()
        if not line:
            continue
        batch.append(_parse_request(line))
        if len(batch) >= config.batch_size:
            flush_batch()
    flush_batch()
    stdout.flush()
    return 0
