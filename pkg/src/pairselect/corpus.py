"""Parallel corpus ingestion: normalization, tokenization, cleaning, indexing.

A corpus is an ordered, deduplicated list of sentence pairs. Each side of a
pair is one "document" for document-frequency purposes, and document
frequencies are kept separately per side.
"""

from __future__ import annotations

import json
import unicodedata
from collections import Counter
from dataclasses import dataclass, field

from .errors import InputError

DEFAULT_MAX_TOKENS = 512

SOURCE = "source"
TARGET = "target"

# Token languages understood by tokenize(). "pretokenized" trusts the spaces
# already present in the text.
LANGS = ("ja", "en", "pretokenized")


def normalize(text: str) -> str:
    """Canonicalize raw text: compatibility-fold, case-fold, tidy whitespace.

    Applies NFKC, then full case folding, then NFC, so the result is an
    NFC-normalized, case-folded string (NFKC is needed so that e.g. fullwidth
    Latin letters fold down to their ASCII forms). Leading/trailing whitespace
    is stripped and internal whitespace runs collapse to a single space.
    Total: never raises.
    """
    folded = unicodedata.normalize("NFKC", text).casefold()
    folded = unicodedata.normalize("NFC", folded)
    return " ".join(folded.split())


# Script ranges for the Japanese character-fallback tokenizer. Han, hiragana
# and katakana runs are split per code point; any other run of characters
# sharing a class stays one token.
_HIRAGANA = ((0x3041, 0x309F),)
_KATAKANA = ((0x30A0, 0x30FF), (0x31F0, 0x31FF), (0xFF66, 0xFF9D))
_HAN = (
    (0x3005, 0x3007),  # iteration/closing marks conventionally treated as Han
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0xF900, 0xFAFF),
    (0x20000, 0x2FA1F),
)

_SPLIT_CLASSES = ("han", "hiragana", "katakana")


def _char_class(ch: str) -> str:
    cp = ord(ch)
    for lo, hi in _HIRAGANA:
        if lo <= cp <= hi:
            return "hiragana"
    for lo, hi in _KATAKANA:
        if lo <= cp <= hi:
            return "katakana"
    for lo, hi in _HAN:
        if lo <= cp <= hi:
            return "han"
    # Everything else groups by major Unicode category (letters, digits,
    # punctuation, ...), which keeps Latin words and numbers intact.
    return unicodedata.category(ch)[0]


def _tokenize_ja(chunk: str) -> list[str]:
    tokens: list[str] = []
    run: list[str] = []
    run_class = ""
    for ch in chunk:
        cls = _char_class(ch)
        if cls in _SPLIT_CLASSES:
            if run:
                tokens.append("".join(run))
                run = []
            tokens.append(ch)
            run_class = ""
        elif cls == run_class and run:
            run.append(ch)
        else:
            if run:
                tokens.append("".join(run))
            run = [ch]
            run_class = cls
    if run:
        tokens.append("".join(run))
    return tokens


def tokenize(text: str, lang: str) -> list[str]:
    """Split normalized text into tokens.

    "en" and "pretokenized" split on whitespace. "ja" additionally splits
    each whitespace chunk into runs of the same script class, with Han,
    hiragana and katakana runs falling back to one token per character.
    """
    if lang not in LANGS:
        raise ValueError(f"unknown tokenizer language: {lang!r}")
    chunks = text.split()
    if lang != "ja":
        return chunks
    tokens: list[str] = []
    for chunk in chunks:
        tokens.extend(_tokenize_ja(chunk))
    return tokens


@dataclass(frozen=True)
class TokenizerConfig:
    """How each side of a corpus is tokenized. Stored with the corpus so that
    held-out text can be tokenized identically later."""

    source_lang: str = "ja"
    target_lang: str = "en"
    max_tokens: int = DEFAULT_MAX_TOKENS

    def lang_for(self, side: str) -> str:
        return self.source_lang if side == SOURCE else self.target_lang


@dataclass(frozen=True)
class SentencePair:
    """One aligned sentence pair, already normalized and tokenized."""

    id: int
    source_text: str
    target_text: str
    source_tokens: tuple[str, ...]
    target_tokens: tuple[str, ...]

    def text(self, side: str) -> str:
        return self.source_text if side == SOURCE else self.target_text

    def tokens(self, side: str) -> tuple[str, ...]:
        return self.source_tokens if side == SOURCE else self.target_tokens


@dataclass(frozen=True)
class CorpusStats:
    pair_count: int
    source_vocab_size: int
    target_vocab_size: int


@dataclass(frozen=True)
class Rejection:
    """One dropped input row and why it was dropped."""

    line: int
    reason: str

    def to_json(self) -> str:
        return json.dumps({"line": self.line, "reason": self.reason}, ensure_ascii=False)


class ParallelCorpus:
    """Immutable, ordered, deduplicated collection of sentence pairs.

    Builds per-side document-frequency indexes on construction (a "document"
    is one side of one pair). Safe to share across threads once built.
    """

    def __init__(self, pairs: list[SentencePair], tokenizer: TokenizerConfig):
        self.pairs: tuple[SentencePair, ...] = tuple(pairs)
        self.tokenizer = tokenizer
        self.doc_freq_source: Counter[str] = Counter()
        self.doc_freq_target: Counter[str] = Counter()
        for pair in self.pairs:
            self.doc_freq_source.update(set(pair.source_tokens))
            self.doc_freq_target.update(set(pair.target_tokens))
        self._by_id = {pair.id: pair for pair in self.pairs}

    @property
    def n_docs(self) -> int:
        return len(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __getitem__(self, pair_id: int) -> SentencePair:
        return self._by_id[pair_id]

    def ids(self) -> list[int]:
        return [pair.id for pair in self.pairs]

    def doc_freq(self, side: str) -> Counter[str]:
        return self.doc_freq_source if side == SOURCE else self.doc_freq_target

    def stats(self) -> CorpusStats:
        return CorpusStats(
            pair_count=len(self.pairs),
            source_vocab_size=len(self.doc_freq_source),
            target_vocab_size=len(self.doc_freq_target),
        )


@dataclass
class _Builder:
    """Shared cleaning pipeline for ingest() and build_corpus()."""

    tokenizer: TokenizerConfig
    pairs: list[SentencePair] = field(default_factory=list)
    rejections: list[Rejection] = field(default_factory=list)
    seen: set[tuple[str, str]] = field(default_factory=set)

    def reject(self, line: int, reason: str) -> None:
        self.rejections.append(Rejection(line=line, reason=reason))

    def add(self, line: int, src_raw: str, tgt_raw: str) -> None:
        src = normalize(src_raw)
        tgt = normalize(tgt_raw)
        if not src:
            self.reject(line, "empty_source")
            return
        if not tgt:
            self.reject(line, "empty_target")
            return
        src, src_tokens = self._tokenize_side(src, SOURCE)
        tgt, tgt_tokens = self._tokenize_side(tgt, TARGET)
        if _excessive_repetition(src_tokens) or _excessive_repetition(tgt_tokens):
            self.reject(line, "repetition")
            return
        key = (src, tgt)
        if key in self.seen:
            self.reject(line, "duplicate")
            return
        self.seen.add(key)
        self.pairs.append(
            SentencePair(
                id=len(self.pairs),
                source_text=src,
                target_text=tgt,
                source_tokens=tuple(src_tokens),
                target_tokens=tuple(tgt_tokens),
            )
        )

    def _tokenize_side(self, text: str, side: str) -> tuple[str, list[str]]:
        tokens = tokenize(text, self.tokenizer.lang_for(side))
        if len(tokens) > self.tokenizer.max_tokens:
            tokens = tokens[: self.tokenizer.max_tokens]
            # Re-join so the stored text and its tokens stay consistent;
            # re-tokenizing the joined text reproduces the same tokens.
            text = " ".join(tokens)
        return text, tokens

    def corpus(self) -> ParallelCorpus:
        return ParallelCorpus(self.pairs, self.tokenizer)


def _excessive_repetition(tokens: list[str], min_len: int = 10, share: float = 0.5) -> bool:
    # Reject a side when one token exceeds half its length (sides of >= 10
    # tokens only, so short formulaic lines survive).
    if len(tokens) < min_len:
        return False
    (_, top), = Counter(tokens).most_common(1)
    return top > share * len(tokens)


def build_corpus(
    rows: list[tuple[str, str]], tokenizer: TokenizerConfig | None = None
) -> tuple[ParallelCorpus, list[Rejection]]:
    """Build a corpus from in-memory (source, target) rows. Line numbers in
    rejections are 1-based row indexes."""
    builder = _Builder(tokenizer or TokenizerConfig())
    for line, (src, tgt) in enumerate(rows, start=1):
        builder.add(line, src, tgt)
    return builder.corpus(), builder.rejections


def ingest(
    path: str, format: str = "tsv", tokenizer: TokenizerConfig | None = None
) -> tuple[ParallelCorpus, list[Rejection]]:
    """Read a TSV or JSONL bitext file into a cleaned, indexed corpus.

    Retained pairs get ids 0..N-1 in input order. Rows that fail parsing or
    cleaning are returned as rejections with their 1-based line number; they
    are never silently dropped.
    """
    if format not in ("tsv", "jsonl"):
        raise ValueError(f"unknown corpus format: {format!r}")
    builder = _Builder(tokenizer or TokenizerConfig())
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read corpus file {path}: {exc}") from exc
    with fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.rstrip("\n").rstrip("\r")
            if format == "tsv":
                cols = raw.split("\t")
                if len(cols) != 2:
                    builder.reject(line_no, "malformed")
                    continue
                builder.add(line_no, cols[0], cols[1])
            else:
                try:
                    obj = json.loads(raw)
                except json.JSONDecodeError:
                    builder.reject(line_no, "malformed")
                    continue
                if (
                    not isinstance(obj, dict)
                    or not isinstance(obj.get("src"), str)
                    or not isinstance(obj.get("tgt"), str)
                ):
                    builder.reject(line_no, "malformed")
                    continue
                builder.add(line_no, obj["src"], obj["tgt"])
    return builder.corpus(), builder.rejections


def corpus_stats(corpus: ParallelCorpus) -> CorpusStats:
    return corpus.stats()


def save_corpus(corpus: ParallelCorpus, path: str) -> None:
    """Write the cleaned corpus as JSONL with explicit token lists, so that a
    reload does not depend on re-running the tokenizer."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "kind": "pairselect-corpus",
            "version": 1,
            "source_lang": corpus.tokenizer.source_lang,
            "target_lang": corpus.tokenizer.target_lang,
            "max_tokens": corpus.tokenizer.max_tokens,
            "pair_count": len(corpus),
        }
        fh.write(json.dumps(header, ensure_ascii=False, sort_keys=True) + "\n")
        for pair in corpus:
            row = {
                "id": pair.id,
                "src": pair.source_text,
                "tgt": pair.target_text,
                "src_tok": list(pair.source_tokens),
                "tgt_tok": list(pair.target_tokens),
            }
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def load_corpus(path: str) -> ParallelCorpus:
    """Reload a corpus written by save_corpus()."""
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read corpus cache {path}: {exc}") from exc
    with fh:
        try:
            header = json.loads(fh.readline())
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not a corpus cache (bad header)") from exc
        if header.get("kind") != "pairselect-corpus" or header.get("version") != 1:
            raise InputError(f"{path}: not a version-1 corpus cache")
        tokenizer = TokenizerConfig(
            source_lang=header["source_lang"],
            target_lang=header["target_lang"],
            max_tokens=header["max_tokens"],
        )
        pairs = []
        for raw in fh:
            obj = json.loads(raw)
            pairs.append(
                SentencePair(
                    id=obj["id"],
                    source_text=obj["src"],
                    target_text=obj["tgt"],
                    source_tokens=tuple(obj["src_tok"]),
                    target_tokens=tuple(obj["tgt_tok"]),
                )
            )
    return ParallelCorpus(pairs, tokenizer)
