import json
import random
import unicodedata

import pytest

from pairselect.corpus import (
    TokenizerConfig,
    build_corpus,
    corpus_stats,
    ingest,
    load_corpus,
    normalize,
    save_corpus,
    tokenize,
)
from pairselect.errors import InputError


class TestNormalize:
    def test_compatibility_and_case(self):
        # fullwidth C folds to ascii c; e + combining acute composes to é
        assert normalize("Ｃafé") == "café"

    def test_whitespace_collapse(self):
        assert normalize("  Hello   World  ") == "hello world"

    def test_lowercase(self):
        assert normalize("ABC") == "abc"

    def test_empty_and_space_only(self):
        assert normalize("") == ""
        assert normalize(" \t\n ") == ""

    def test_idempotent_on_random_text(self):
        rng = random.Random(7)
        pool = (
            "abcXYZ 0123猫犬カナがな ＡＢＣＣﬁİẞéé"
            "　\t。、.,!？"
        )
        for _ in range(500):
            text = "".join(rng.choice(pool) for _ in range(rng.randrange(0, 30)))
            once = normalize(text)
            assert normalize(once) == once


class TestTokenize:
    def test_en_whitespace(self):
        assert tokenize("hello world", "en") == ["hello", "world"]

    def test_ja_character_fallback(self):
        assert tokenize("猫がいる", "ja") == ["猫", "が", "い", "る"]

    def test_empty(self):
        assert tokenize("", "ja") == []
        assert tokenize("", "en") == []

    def test_ja_mixed_scripts(self):
        # latin run stays one token; kana/han split per character
        assert tokenize("abc猫カナ", "ja") == ["abc", "猫", "カ", "ナ"]

    def test_ja_digits_group(self):
        assert tokenize("2024年", "ja") == ["2024", "年"]

    def test_pretokenized_trusts_spaces(self):
        assert tokenize("猫 が いる", "pretokenized") == ["猫", "が", "いる"]

    def test_unknown_lang(self):
        with pytest.raises(ValueError):
            tokenize("x", "fr")

    def test_deterministic(self):
        text = "水の都・大阪 ABC 123 カタカナです。"
        assert tokenize(text, "ja") == tokenize(text, "ja")


class TestBuildCorpus:
    def test_dedup_and_empty(self):
        rows = [("猫", "cat"), ("", "dog"), ("猫", "cat")]
        corpus, rejections = build_corpus(rows)
        assert len(corpus) == 1
        assert len(rejections) == 2
        reasons = sorted(r.reason for r in rejections)
        assert reasons == ["duplicate", "empty_source"]

    def test_ids_in_input_order(self):
        rows = [(f"src{i}", f"tgt{i}") for i in range(1000)]
        corpus, rejections = build_corpus(
            rows, TokenizerConfig(source_lang="en", target_lang="en")
        )
        assert len(corpus) == 1000
        assert not rejections
        assert corpus.ids() == list(range(1000))

    def test_duplicate_key_is_the_pair_not_one_side(self):
        # same source with two targets is legitimate
        rows = [("猫", "cat"), ("猫", "a cat")]
        corpus, rejections = build_corpus(rows)
        assert len(corpus) == 2
        assert not rejections

    def test_truncation_to_max_tokens(self):
        long_src = " ".join(f"w{i}" for i in range(600))
        corpus, _ = build_corpus(
            [(long_src, "t")],
            TokenizerConfig(source_lang="en", target_lang="en", max_tokens=512),
        )
        pair = corpus.pairs[0]
        assert len(pair.source_tokens) == 512
        # stored text re-tokenizes to exactly the stored tokens
        assert tuple(tokenize(pair.source_text, "en")) == pair.source_tokens

    def test_repetition_filter(self):
        noisy = " ".join(["spam"] * 9 + ["x"])  # 10 tokens, 90% one type
        ok = " ".join(["spam"] * 4 + ["a", "b", "c", "d", "e", "f"])
        corpus, rejections = build_corpus(
            [(noisy, "t"), (ok, "t2")],
            TokenizerConfig(source_lang="en", target_lang="en"),
        )
        assert len(corpus) == 1
        assert [r.reason for r in rejections] == ["repetition"]

    def test_short_sides_escape_repetition_filter(self):
        corpus, rejections = build_corpus(
            [("ha ha ha", "t")], TokenizerConfig(source_lang="en", target_lang="en")
        )
        assert len(corpus) == 1 and not rejections


class TestIngest:
    def _write(self, tmp_path, name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    def test_tsv_roundtrip(self, tmp_path):
        path = self._write(tmp_path, "c.tsv", "猫\tcat\n犬\tdog\n")
        corpus, rejections = ingest(path, "tsv")
        assert len(corpus) == 2
        assert not rejections

    def test_tsv_malformed_rows_counted(self, tmp_path):
        path = self._write(tmp_path, "c.tsv", "a\tb\nonly one column\na\tb\tc\n")
        corpus, rejections = ingest(
            path, "tsv", TokenizerConfig(source_lang="en", target_lang="en")
        )
        assert len(corpus) == 1
        assert [(r.line, r.reason) for r in rejections] == [
            (2, "malformed"),
            (3, "malformed"),
        ]

    def test_jsonl(self, tmp_path):
        rows = [
            json.dumps({"src": "猫", "tgt": "cat"}),
            json.dumps({"src": "犬", "tgt": "dog", "id": 99, "meta": "ignored"}),
            "not json",
            json.dumps({"src": "鳥"}),  # missing tgt
        ]
        path = self._write(tmp_path, "c.jsonl", "\n".join(rows) + "\n")
        corpus, rejections = ingest(path, "jsonl")
        assert len(corpus) == 2
        assert corpus.ids() == [0, 1]  # input ids are ignored, order rules
        assert sorted(r.reason for r in rejections) == ["malformed", "malformed"]

    def test_missing_file(self):
        with pytest.raises(InputError):
            ingest("/nonexistent/corpus.tsv", "tsv")

    def test_bad_format(self, tmp_path):
        path = self._write(tmp_path, "c.tsv", "a\tb\n")
        with pytest.raises(ValueError):
            ingest(path, "xml")

    def test_ingest_deterministic(self, tmp_path):
        text = "猫\tcat\n\tdog\n猫\tcat\n犬犬\tdogs\n"
        p1 = self._write(tmp_path, "a.tsv", text)
        p2 = self._write(tmp_path, "b.tsv", text)
        c1, r1 = ingest(p1, "tsv")
        c2, r2 = ingest(p2, "tsv")
        assert [(p.id, p.source_text, p.target_text) for p in c1] == [
            (p.id, p.source_text, p.target_text) for p in c2
        ]
        assert r1 == r2


class TestCorpusIndexes:
    def test_doc_freq_bounds(self):
        rows = [("a b", "x"), ("b c", "x y")]
        corpus, _ = build_corpus(rows, TokenizerConfig("en", "en"))
        for side in ("source", "target"):
            for token, freq in corpus.doc_freq(side).items():
                assert 1 <= freq <= corpus.n_docs

    def test_stats_hand_counted(self):
        rows = [("a b", "x"), ("b c", "x y")]
        corpus, _ = build_corpus(rows, TokenizerConfig("en", "en"))
        stats = corpus_stats(corpus)
        assert stats.pair_count == 2
        assert stats.source_vocab_size == 3
        assert stats.target_vocab_size == 2

    def test_stats_empty(self):
        corpus, _ = build_corpus([], TokenizerConfig("en", "en"))
        assert corpus_stats(corpus) == type(corpus_stats(corpus))(0, 0, 0)

    def test_stats_single(self):
        corpus, _ = build_corpus([("a", "b")], TokenizerConfig("en", "en"))
        stats = corpus_stats(corpus)
        assert (stats.pair_count, stats.source_vocab_size, stats.target_vocab_size) == (1, 1, 1)

    def test_token_budget_invariant(self):
        rng = random.Random(3)
        rows = []
        for _ in range(50):
            n = rng.randrange(1, 1200)
            rows.append((" ".join(f"s{rng.randrange(40)}" for _ in range(n)), "t"))
        corpus, _ = build_corpus(rows, TokenizerConfig("en", "en", max_tokens=512))
        for pair in corpus:
            assert len(pair.source_tokens) <= 512
            assert len(pair.target_tokens) <= 512

    def test_no_textual_duplicates_after_ingest(self):
        rng = random.Random(11)
        rows = [
            (f"w{rng.randrange(5)} w{rng.randrange(5)}", f"t{rng.randrange(3)}")
            for _ in range(200)
        ]
        corpus, _ = build_corpus(rows, TokenizerConfig("en", "en"))
        keys = [(p.source_text, p.target_text) for p in corpus]
        assert len(keys) == len(set(keys))


class TestSaveLoad:
    def test_roundtrip(self, tmp_path):
        rows = [("猫がいる", "there is a cat"), ("犬", "dog")]
        corpus, _ = build_corpus(rows)
        path = str(tmp_path / "corpus.jsonl")
        save_corpus(corpus, path)
        loaded = load_corpus(path)
        assert loaded.ids() == corpus.ids()
        for a, b in zip(corpus, loaded):
            assert (a.source_text, a.target_text) == (b.source_text, b.target_text)
            assert a.source_tokens == b.source_tokens
            assert a.target_tokens == b.target_tokens
        assert loaded.doc_freq_source == corpus.doc_freq_source

    def test_load_rejects_garbage(self, tmp_path):
        path = tmp_path / "junk.jsonl"
        path.write_text("not a corpus\n", encoding="utf-8")
        with pytest.raises(InputError):
            load_corpus(str(path))


def test_nfc_output_property():
    # outputs are NFC fixed points even when the input mixes forms
    samples = ["Ｃafé", "école", "ｶﾀｶﾅ", "ﬁne", "İstanbul"]
    for text in samples:
        out = normalize(text)
        assert unicodedata.normalize("NFC", out) == out
