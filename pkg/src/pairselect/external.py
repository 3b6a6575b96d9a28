"""Externally produced quality signals: score files, embeddings, and a
streaming scorer client.

Neural scorers never run in-process. They are consumed either as JSONL score
files or over a line-delimited JSON wire protocol spoken with a subprocess:

    request:  {"id": <int>, "src": <string>, "tgt": <string>}
    response: {"id": <int>, "score": <finite number>}

The client closes the request stream at end of input; a conforming scorer
answers every outstanding request and exits 0. Responses may arrive in any
order. A response with "score": null (plus an "error" field) marks that id
as unanswered.
"""

from __future__ import annotations

import json
import math
import queue
import subprocess
import threading
from dataclasses import dataclass

from .corpus import ParallelCorpus
from .errors import InputError, ScorerError

HIGHER_BETTER = "higher_better"
LOWER_BETTER = "lower_better"
DIRECTIONS = (HIGHER_BETTER, LOWER_BETTER)

DEFAULT_WINDOW = 256
DEFAULT_TIMEOUT = 120.0


def _require_direction(direction: str) -> None:
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")


@dataclass(frozen=True)
class ExternalScoreColumn:
    """A complete per-pair score column with its ranking direction."""

    method_name: str
    scores: dict[int, float]
    direction: str
    declared_range: tuple[float, float] | None = None

    def validate(self, corpus_ids: set[int]) -> None:
        _require_direction(self.direction)
        have = set(self.scores)
        missing = corpus_ids - have
        if missing:
            raise InputError(
                f"{self.method_name}: column is missing ids {_preview(missing)}"
            )
        extra = have - corpus_ids
        if extra:
            raise InputError(
                f"{self.method_name}: column has unknown ids {_preview(extra)}"
            )
        for pair_id, score in self.scores.items():
            if not math.isfinite(score):
                raise InputError(f"{self.method_name}: non-finite score for id {pair_id}")
        if self.declared_range is not None:
            lo, hi = self.declared_range
            for pair_id, score in self.scores.items():
                if not lo <= score <= hi:
                    raise InputError(
                        f"{self.method_name}: score {score} for id {pair_id} "
                        f"outside declared range [{lo}, {hi}]"
                    )


@dataclass(frozen=True)
class EmbeddingTable:
    """Fixed-dimension embedding per id. May cover more than the corpus
    (e.g. extra in-domain exemplars)."""

    dim: int
    vectors: dict[int, tuple[float, ...]]


def _preview(ids, limit: int = 10) -> str:
    ordered = sorted(ids)
    if len(ordered) <= limit:
        return str(ordered)
    return f"{ordered[:limit]} ... ({len(ordered)} total)"


def load_scores(
    path: str,
    corpus: ParallelCorpus,
    method_name: str,
    direction: str = HIGHER_BETTER,
    declared_range: tuple[float, float] | None = None,
) -> ExternalScoreColumn:
    """Read a JSONL score file ({"id": int, "score": number} per line) and
    validate it covers exactly the corpus id set."""
    _require_direction(direction)
    corpus_ids = set(corpus.ids())
    scores: dict[int, float] = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read score file {path}: {exc}") from exc
    with fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}:{line_no}: invalid JSON") from exc
            if not isinstance(obj, dict) or not isinstance(obj.get("id"), int):
                raise InputError(f"{path}:{line_no}: expected an object with an int id")
            pair_id = obj["id"]
            score = obj.get("score")
            if isinstance(score, bool) or not isinstance(score, (int, float)):
                raise InputError(f"{path}:{line_no}: score must be a number")
            score = float(score)
            if not math.isfinite(score):
                raise InputError(f"{path}:{line_no}: non-finite score")
            if pair_id not in corpus_ids:
                raise InputError(f"{path}:{line_no}: unknown id {pair_id}")
            if pair_id in scores:
                raise InputError(f"{path}:{line_no}: duplicate id {pair_id}")
            scores[pair_id] = score
    missing = corpus_ids - set(scores)
    if missing:
        raise InputError(f"{path}: missing scores for ids {_preview(missing)}")
    column = ExternalScoreColumn(
        method_name=method_name,
        scores=scores,
        direction=direction,
        declared_range=declared_range,
    )
    column.validate(corpus_ids)
    return column


def load_embeddings(path: str) -> EmbeddingTable:
    """Read a JSONL embedding file ({"id": int, "vec": [numbers]} per line)."""
    vectors: dict[int, tuple[float, ...]] = {}
    dim: int | None = None
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read embedding file {path}: {exc}") from exc
    with fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}:{line_no}: invalid JSON") from exc
            if (
                not isinstance(obj, dict)
                or not isinstance(obj.get("id"), int)
                or not isinstance(obj.get("vec"), list)
            ):
                raise InputError(f"{path}:{line_no}: expected {{id, vec}}")
            pair_id = obj["id"]
            if pair_id in vectors:
                raise InputError(f"{path}:{line_no}: duplicate id {pair_id}")
            vec = []
            for value in obj["vec"]:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise InputError(f"{path}:{line_no}: vector entries must be numbers")
                value = float(value)
                if not math.isfinite(value):
                    raise InputError(f"{path}:{line_no}: non-finite vector entry")
                vec.append(value)
            if not vec:
                raise InputError(f"{path}:{line_no}: empty vector")
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise InputError(
                    f"{path}:{line_no}: dimension {len(vec)} != {dim} of earlier rows"
                )
            vectors[pair_id] = tuple(vec)
    if dim is None:
        raise InputError(f"{path}: no embeddings found")
    return EmbeddingTable(dim=dim, vectors=vectors)


def cosine_similarity(u, v) -> float:
    """u.v / (|u||v|); domain error on dimension mismatch or a zero vector."""
    if len(u) != len(v):
        raise ValueError(f"dimension mismatch: {len(u)} vs {len(v)}")
    norm_u = math.sqrt(sum(x * x for x in u))
    norm_v = math.sqrt(sum(x * x for x in v))
    if norm_u == 0.0 or norm_v == 0.0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    return sum(x * y for x, y in zip(u, v)) / (norm_u * norm_v)


def semantic_similarity_scores(
    embeddings: EmbeddingTable,
    corpus: ParallelCorpus,
    in_domain_ids: list[int],
    method_name: str = "semsim",
) -> ExternalScoreColumn:
    """Cosine similarity of each pair's embedding to the mean in-domain
    embedding (higher is more in-domain)."""
    if not in_domain_ids:
        raise ValueError("need at least one in-domain id")
    missing = [i for i in in_domain_ids if i not in embeddings.vectors]
    if missing:
        raise InputError(f"embeddings missing in-domain ids {_preview(missing)}")
    corpus_ids = corpus.ids()
    missing = [i for i in corpus_ids if i not in embeddings.vectors]
    if missing:
        raise InputError(f"embeddings missing corpus ids {_preview(missing)}")
    dim = embeddings.dim
    mean = [0.0] * dim
    for pair_id in in_domain_ids:
        vec = embeddings.vectors[pair_id]
        for i in range(dim):
            mean[i] += vec[i]
    mean = [x / len(in_domain_ids) for x in mean]
    scores = {
        pair_id: cosine_similarity(embeddings.vectors[pair_id], mean)
        for pair_id in corpus_ids
    }
    column = ExternalScoreColumn(
        method_name=method_name, scores=scores, direction=HIGHER_BETTER
    )
    column.validate(set(corpus_ids))
    return column


class _ResponseReader(threading.Thread):
    """Drains scorer stdout into a queue so the consumer can time out."""

    def __init__(self, stream):
        super().__init__(daemon=True)
        self.stream = stream
        self.lines: queue.Queue = queue.Queue()

    def run(self):
        for line in self.stream:
            self.lines.put(line)
        self.lines.put(None)  # EOF sentinel


class _StderrDrain(threading.Thread):
    """Keeps reading scorer stderr so a chatty scorer never blocks on a full
    pipe; the text is kept for error reports."""

    def __init__(self, stream):
        super().__init__(daemon=True)
        self.stream = stream
        self.chunks: list[str] = []

    def run(self):
        for line in self.stream:
            self.chunks.append(line)

    def text(self) -> str:
        return "".join(self.chunks)


def stream_score(
    corpus: ParallelCorpus,
    command: list[str],
    method_name: str,
    direction: str = HIGHER_BETTER,
    declared_range: tuple[float, float] | None = None,
    window: int = DEFAULT_WINDOW,
    timeout: float = DEFAULT_TIMEOUT,
) -> ExternalScoreColumn:
    """Score every pair through a scorer subprocess speaking the wire
    protocol. Requests are pipelined up to `window` in flight; responses are
    matched by id and may arrive in any order."""
    _require_direction(direction)
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    try:
        proc = subprocess.Popen(
            command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
            encoding="utf-8",
        )
    except OSError as exc:
        raise ScorerError(f"cannot start scorer {command!r}: {exc}") from exc

    in_flight = threading.Semaphore(window)
    write_error: list[BaseException] = []

    def write_requests():
        try:
            for pair in corpus:
                in_flight.acquire()
                request = {"id": pair.id, "src": pair.source_text, "tgt": pair.target_text}
                proc.stdin.write(json.dumps(request, ensure_ascii=False) + "\n")
                proc.stdin.flush()
        except BrokenPipeError:
            pass  # scorer died; the reader side reports the real failure
        except BaseException as exc:  # surfaced after the read loop
            write_error.append(exc)
        finally:
            try:
                proc.stdin.close()
            except OSError:
                pass

    writer = threading.Thread(target=write_requests, daemon=True)
    reader = _ResponseReader(proc.stdout)
    stderr_drain = _StderrDrain(proc.stderr)
    writer.start()
    reader.start()
    stderr_drain.start()

    expected = set(corpus.ids())
    scores: dict[int, float] = {}
    failed: set[int] = set()

    def unblock_writer() -> None:
        # The writer may be parked on the in-flight window; give it room so
        # it can observe the dead pipe and finish.
        for _ in range(len(expected) + 1):
            in_flight.release()

    def fail(message: str) -> ScorerError:
        proc.kill()
        proc.wait()
        unblock_writer()
        stderr_drain.join(timeout=5)
        stderr = stderr_drain.text()
        detail = f"\nscorer stderr:\n{stderr.strip()}" if stderr.strip() else ""
        return ScorerError(f"{method_name}: {message}{detail}")

    answered = 0
    while answered < len(expected):
        try:
            line = reader.lines.get(timeout=timeout)
        except queue.Empty:
            unanswered = expected - set(scores) - failed
            raise fail(f"timeout waiting for ids {_preview(unanswered)}")
        if line is None:
            break  # EOF before all responses
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            raise fail(f"malformed response line: {line[:200]!r}")
        if not isinstance(obj, dict) or not isinstance(obj.get("id"), int):
            raise fail(f"response without an int id: {line[:200]!r}")
        pair_id = obj["id"]
        if pair_id not in expected:
            raise fail(f"response for unknown id {pair_id}")
        if pair_id in scores or pair_id in failed:
            raise fail(f"duplicate response for id {pair_id}")
        score = obj.get("score")
        if score is None:
            failed.add(pair_id)
        elif isinstance(score, bool) or not isinstance(score, (int, float)):
            raise fail(f"non-numeric score for id {pair_id}")
        elif not math.isfinite(float(score)):
            raise fail(f"non-finite score for id {pair_id}")
        else:
            scores[pair_id] = float(score)
        answered += 1
        in_flight.release()

    unblock_writer()
    writer.join(timeout=timeout)
    try:
        returncode = proc.wait(timeout=timeout)
    except subprocess.TimeoutExpired:
        raise fail("scorer did not exit after end of input")
    stderr_drain.join(timeout=5)
    stderr = stderr_drain.text()
    if write_error:
        raise ScorerError(f"{method_name}: failed writing requests: {write_error[0]}")
    unanswered = expected - set(scores) - failed
    if unanswered:
        detail = f"\nscorer stderr:\n{stderr.strip()}" if stderr.strip() else ""
        raise ScorerError(
            f"{method_name}: scorer exited leaving ids {_preview(unanswered)} "
            f"unanswered{detail}"
        )
    if returncode != 0:
        detail = f"\nscorer stderr:\n{stderr.strip()}" if stderr.strip() else ""
        raise ScorerError(f"{method_name}: scorer exited with code {returncode}{detail}")
    if failed:
        raise ScorerError(f"{method_name}: scorer reported errors for ids {_preview(failed)}")
    column = ExternalScoreColumn(
        method_name=method_name,
        scores=scores,
        direction=direction,
        declared_range=declared_range,
    )
    column.validate(expected)
    return column


def check_scorer_protocol(
    command: list[str],
    pairs: list[tuple[int, str, str]] | None = None,
    timeout: float = DEFAULT_TIMEOUT,
) -> dict:
    """Conformance harness for scorer processes (usable against any bridge).

    Drives the command over the wire protocol with a small request set and
    verifies: one response per request id (bijection), tolerance to
    out-of-order responses, finite scores, and a clean exit after the request
    stream closes. Returns a summary dict; raises ScorerError on violation.
    """
    if pairs is None:
        pairs = [(i, f"source sentence {i}", f"target sentence {i}") for i in range(37)]
    from .corpus import SentencePair, ParallelCorpus, TokenizerConfig

    built = [
        SentencePair(
            id=pair_id,
            source_text=src,
            target_text=tgt,
            source_tokens=tuple(src.split()),
            target_tokens=tuple(tgt.split()),
        )
        for pair_id, src, tgt in pairs
    ]
    corpus = ParallelCorpus(built, TokenizerConfig(source_lang="en", target_lang="en"))
    column = stream_score(
        corpus, command, method_name="protocol-check", timeout=timeout
    )
    # Empty-input conformance: with no requests the scorer must exit 0.
    proc = subprocess.Popen(
        command,
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
    )
    out, err = proc.communicate(input="", timeout=timeout)
    if proc.returncode != 0:
        raise ScorerError(
            f"scorer exited with code {proc.returncode} on empty input: {err.strip()}"
        )
    if out.strip():
        raise ScorerError(f"scorer wrote output for zero requests: {out[:200]!r}")
    return {
        "requests": len(pairs),
        "responses": len(column.scores),
        "score_min": min(column.scores.values()),
        "score_max": max(column.scores.values()),
    }
