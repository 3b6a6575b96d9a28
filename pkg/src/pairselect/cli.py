"""Command-line pipeline: ingest -> score -> select -> analyze -> report.

Each subcommand is one process; state moves between steps through files
(corpus cache, score table, selection files), so external scorers can run
elsewhere between steps. Exit codes: 0 success, 2 configuration error,
3 input/data error, 4 external scorer failure.
"""

from __future__ import annotations

import argparse
import json
import os
import shlex
import sys
from dataclasses import dataclass, field

from . import analysis, corpus as corpus_mod, fdscore, lm, metrics, selection
from .errors import ConfigError, InputError, ScorerError
from .tfidf import SIDES, avg_idf, mean_tfidf
from .external import (
    HIGHER_BETTER,
    LOWER_BETTER,
    load_embeddings,
    load_scores,
    semantic_similarity_scores,
    stream_score,
)
from .scoretable import ScoreTable, config_fingerprint

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_SCORER = 4

BUILTIN_METHODS = ("tfidf", "avgidf", "fdscore", "moore-lewis", "ter", "semsim")


@dataclass
class PipelineConfig:
    """Defaults shared across subcommands, loadable from a JSON file."""

    corpus: str | None = None
    table: str | None = None
    output_dir: str = "."
    k: int = 0
    seed: int = 42
    side: str = "both"
    lm_order: int = 3
    lm_alpha: float = 0.1
    methods: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_file(cls, path: str) -> "PipelineConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON config: {exc}") from exc
        config = cls()
        for key in ("corpus", "table", "output_dir", "k", "seed", "side",
                    "lm_order", "lm_alpha", "methods"):
            if key in raw:
                setattr(config, key, raw.pop(key))
        config.extra = raw
        config.validate()
        return config

    def validate(self) -> None:
        if self.k < 0:
            raise ConfigError(f"k must be >= 0, got {self.k}")
        for method in self.methods:
            if method not in BUILTIN_METHODS and method != "random":
                raise ConfigError(
                    f"unknown scorer {method!r} in config (external scorers need "
                    f"--scores or --scorer-cmd at score time)"
                )
        for path in (self.corpus, self.table):
            if path is not None and not os.path.exists(path):
                raise ConfigError(f"configured path does not exist: {path}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pairselect",
        description="Score parallel corpora and select budgeted fine-tuning subsets.",
    )
    parser.add_argument("--config", help="JSON file with default flag values")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads (reserved; scoring is single-threaded)")
    parser.add_argument("--output-dir", default=None, help="directory for outputs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="clean and index a bitext file")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("tsv", "jsonl"), default="tsv")
    p.add_argument("--source-lang", choices=corpus_mod.LANGS, default="ja")
    p.add_argument("--target-lang", choices=corpus_mod.LANGS, default="en")
    p.add_argument("--pretokenized", action="store_true",
                   help="trust existing spaces on both sides")
    p.add_argument("--max-tokens", type=int, default=corpus_mod.DEFAULT_MAX_TOKENS)
    p.add_argument("--corpus-out", default=None, help="corpus cache path")
    p.add_argument("--rejections-out", default=None, help="rejection report path")

    p = sub.add_parser("score", help="append score columns to a table")
    p.add_argument("--corpus", default=None, help="corpus cache from ingest")
    p.add_argument("--table", default=None, help="score table CSV (created if absent)")
    p.add_argument("--method", action="append", default=[],
                   help="builtin scorer or a column name for external scores")
    p.add_argument("--side", choices=SIDES, default=None)
    p.add_argument("--cosine-distance", action="store_true",
                   help="use cosine distance for fdscore")
    p.add_argument("--lm-order", type=int, default=None)
    p.add_argument("--lm-alpha", type=float, default=None)
    p.add_argument("--in-corpus", help="in-domain corpus cache (moore-lewis)")
    p.add_argument("--out-corpus", help="out-of-domain corpus cache (moore-lewis)")
    p.add_argument("--refs", help="JSONL {id, ref} reference file (ter)")
    p.add_argument("--scores", help="JSONL {id, score} file for an external method")
    p.add_argument("--scorer-cmd", help="scorer command speaking the wire protocol")
    p.add_argument("--direction", choices=(HIGHER_BETTER, LOWER_BETTER),
                   default=HIGHER_BETTER, help="direction for external methods")
    p.add_argument("--score-range", nargs=2, type=float, metavar=("LO", "HI"),
                   help="declared range for external scores, e.g. 0 1")
    p.add_argument("--embeddings", help="JSONL {id, vec} embeddings (semsim)")
    p.add_argument("--in-domain-ids", help="file with one in-domain id per line (semsim)")
    p.add_argument("--window", type=int, default=256, help="in-flight request window")
    p.add_argument("--timeout", type=float, default=120.0, help="scorer response timeout")
    p.add_argument("--force", action="store_true", help="overwrite existing columns")

    p = sub.add_parser("select", help="budgeted top-k selection")
    p.add_argument("--table", default=None, help="score table (required for score methods)")
    p.add_argument("--corpus", default=None, help="corpus cache (id space for random)")
    p.add_argument("--method", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=None, help="seed for random selection")
    p.add_argument("--emit-ranking", action="store_true",
                   help="also write the full ranking")
    p.add_argument("--output", default=None, help="selection file path")

    p = sub.add_parser("analyze", help="uniqueness/overlap and score distributions")
    p.add_argument("--selections", nargs="*", default=[],
                   help="two or more selection files")
    p.add_argument("--stats", metavar="METHOD",
                   help="distribution stats for one score column")
    p.add_argument("--table", help="score table (with --stats)")
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--histogram-csv", help="write the histogram as CSV here")
    p.add_argument("--output", default=None, help="write analysis JSON here")

    p = sub.add_parser("report", help="render the combined report artifact")
    p.add_argument("--corpus", help="corpus cache for corpus statistics")
    p.add_argument("--table", help="score table for distribution sections")
    p.add_argument("--selections", nargs="*", default=[])
    p.add_argument("--format", choices=analysis.FORMATS, default="markdown")
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--output", required=True)

    return parser


def _outpath(args, default_name: str, explicit: str | None) -> str:
    if explicit:
        return explicit
    out_dir = args.output_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, default_name)


def cmd_ingest(args) -> int:
    if args.pretokenized:
        source_lang = target_lang = "pretokenized"
    else:
        source_lang, target_lang = args.source_lang, args.target_lang
    tokenizer = corpus_mod.TokenizerConfig(
        source_lang=source_lang, target_lang=target_lang, max_tokens=args.max_tokens
    )
    built, rejections = corpus_mod.ingest(args.input, args.format, tokenizer)
    corpus_path = _outpath(args, "corpus.jsonl", args.corpus_out)
    rejections_path = _outpath(args, "rejections.jsonl", args.rejections_out)
    corpus_mod.save_corpus(built, corpus_path)
    with open(rejections_path, "w", encoding="utf-8") as fh:
        for rejection in rejections:
            fh.write(rejection.to_json() + "\n")
    stats = built.stats()
    print(f"pairs: {stats.pair_count}")
    print(f"source vocab: {stats.source_vocab_size}")
    print(f"target vocab: {stats.target_vocab_size}")
    print(f"rejected rows: {len(rejections)}")
    print(f"corpus cache: {corpus_path}")
    print(f"rejection report: {rejections_path}")
    return EXIT_OK


def _load_sequences(path: str, side: str) -> list[list[str]]:
    cached = corpus_mod.load_corpus(path)
    return [list(pair.tokens(side)) for pair in cached]


def _score_builtin(args, built, method: str) -> tuple[dict[int, float], str, dict]:
    """Compute one builtin column; returns (scores, direction, flags)."""
    side = args.side
    if method == "tfidf":
        scores = {p.id: mean_tfidf(built, p, side) for p in built}
        return scores, HIGHER_BETTER, {"method": method, "side": side}
    if method == "avgidf":
        scores = {p.id: avg_idf(built, p, side) for p in built}
        return scores, HIGHER_BETTER, {"method": method, "side": side}
    if method == "fdscore":
        metric = fdscore.COSINE if args.cosine_distance else fdscore.EUCLIDEAN
        scores = fdscore.fd_scores(built, side, metric)
        return scores, HIGHER_BETTER, {"method": method, "side": side, "metric": metric}
    if method == "moore-lewis":
        if not args.in_corpus or not args.out_corpus:
            raise ConfigError("moore-lewis needs --in-corpus and --out-corpus")
        flags = {
            "method": method,
            "side": side,
            "order": args.lm_order,
            "alpha": args.lm_alpha,
        }
        sides = ("source", "target") if side == "both" else (side,)
        lms = {}
        for s in sides:
            lms[s] = (
                lm.train_ngram_lm(_load_sequences(args.in_corpus, s),
                                  args.lm_order, args.lm_alpha),
                lm.train_ngram_lm(_load_sequences(args.out_corpus, s),
                                  args.lm_order, args.lm_alpha),
            )
        scores = {}
        for pair in built:
            total = 0.0
            for s in sides:
                lm_in, lm_out = lms[s]
                total += lm.moore_lewis(pair.tokens(s), lm_in, lm_out)
            scores[pair.id] = total
        return scores, HIGHER_BETTER, flags
    if method == "ter":
        if not args.refs:
            raise ConfigError("ter needs --refs with reference translations")
        refs: dict[int, list[str]] = {}
        with open(args.refs, encoding="utf-8") as fh:
            for line_no, raw in enumerate(fh, start=1):
                raw = raw.strip()
                if not raw:
                    continue
                obj = json.loads(raw)
                if not isinstance(obj.get("id"), int) or not isinstance(obj.get("ref"), str):
                    raise InputError(f"{args.refs}:{line_no}: expected {{id, ref}}")
                text = corpus_mod.normalize(obj["ref"])
                refs[obj["id"]] = corpus_mod.tokenize(
                    text, built.tokenizer.target_lang
                )
        missing = [p.id for p in built if p.id not in refs]
        if missing:
            raise InputError(f"{args.refs}: missing references for ids {missing[:10]}")
        scores = {p.id: metrics.ter(list(p.target_tokens), refs[p.id]) for p in built}
        return scores, LOWER_BETTER, {"method": method}
    if method == "semsim":
        if not args.embeddings or not args.in_domain_ids:
            raise ConfigError("semsim needs --embeddings and --in-domain-ids")
        table = load_embeddings(args.embeddings)
        with open(args.in_domain_ids, encoding="utf-8") as fh:
            ids = [int(line) for line in fh if line.strip()]
        column = semantic_similarity_scores(table, built, ids)
        return column.scores, column.direction, {"method": method}
    raise ConfigError(f"unknown builtin method {method!r}")


def cmd_score(args) -> int:
    if not args.corpus or not args.table:
        raise ConfigError("score needs --corpus and --table")
    if not args.method:
        raise ConfigError("score needs at least one --method")
    built = corpus_mod.load_corpus(args.corpus)
    if os.path.exists(args.table):
        table = ScoreTable.load(args.table)
        if table.ids != built.ids():
            raise InputError(
                f"{args.table}: id space does not match corpus {args.corpus}"
            )
    else:
        table = ScoreTable(built.ids())
    declared_range = tuple(args.score_range) if args.score_range else None
    for method in args.method:
        if method in BUILTIN_METHODS:
            scores, direction, flags = _score_builtin(args, built, method)
            flags["tokenizer"] = [
                built.tokenizer.source_lang,
                built.tokenizer.target_lang,
                built.tokenizer.max_tokens,
            ]
            table.add_column(method, scores, direction, flags=flags, force=args.force)
        elif args.scores:
            column = load_scores(args.scores, built, method, args.direction, declared_range)
            table.add_external(
                column, flags={"method": method, "source": "file"}, force=args.force
            )
        elif args.scorer_cmd:
            column = stream_score(
                built,
                shlex.split(args.scorer_cmd),
                method,
                args.direction,
                declared_range,
                window=args.window,
                timeout=args.timeout,
            )
            table.add_external(
                column, flags={"method": method, "source": "stream"}, force=args.force
            )
        else:
            raise ConfigError(
                f"unknown scorer {method!r}: not a builtin "
                f"({', '.join(BUILTIN_METHODS)}) and no --scores/--scorer-cmd given"
            )
        print(f"scored {len(built)} pairs with {method}")
    table.save(args.table)
    print(f"score table: {args.table} ({len(table.methods())} columns)")
    return EXIT_OK


def cmd_select(args) -> int:
    if args.k < 0:
        raise ConfigError(f"k must be >= 0, got {args.k}")
    if args.method == "random":
        if args.corpus:
            ids = corpus_mod.load_corpus(args.corpus).ids()
        elif args.table:
            ids = ScoreTable.load(args.table).ids
        else:
            raise ConfigError("random selection needs --corpus or --table for the id space")
        result = selection.random_sample(
            ids, args.k, args.seed, emit_ranking=args.emit_ranking
        )
    else:
        if not args.table:
            raise ConfigError(f"selection by {args.method!r} needs --table")
        table = ScoreTable.load(args.table)
        scores = table.column(args.method)
        direction = table.direction(args.method)
        result = selection.select_top_k(
            scores,
            direction,
            args.k,
            method_name=args.method,
            ids=table.ids,
            flags=table.meta[args.method]["flags"],
            emit_ranking=args.emit_ranking,
        )
    out = _outpath(args, f"selection_{args.method}_k{args.k}.jsonl", args.output)
    selection.save_selection(result, out)
    if args.emit_ranking and result.ranking is not None:
        ranking_path = out + ".ranking"
        with open(ranking_path, "w", encoding="utf-8") as fh:
            for pair_id in result.ranking:
                fh.write(f"{pair_id}\n")
        print(f"ranking: {ranking_path}")
    print(f"selected {len(result.selected)} ids -> {out}")
    return EXIT_OK


def _load_selection_sets(paths: list[str]) -> list[tuple[str, set[int]]]:
    named: list[tuple[str, set[int]]] = []
    for path in paths:
        result = selection.load_selection(path)
        named.append((result.method_name, set(result.selected)))
    return named


def cmd_analyze(args) -> int:
    did_something = False
    if args.selections:
        if len(args.selections) < 2:
            raise InputError("uniqueness analysis needs at least two selection files")
        named = _load_selection_sets(args.selections)
        report = analysis.unique_samples(named)
        payload = {
            "union_size": report.union_size,
            "methods": [
                {
                    "method": name,
                    "selected": report.set_sizes[name],
                    "unique": report.unique_counts[name],
                    "unique_pct": report.unique_pcts[name],
                }
                for name in report.methods
            ],
            "overlap": [list(row) for row in report.overlap],
        }
        text = json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2)
        if args.output:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
            print(f"uniqueness report: {args.output}")
        else:
            print(text)
        did_something = True
    if args.stats:
        if not args.table:
            raise ConfigError("--stats needs --table")
        table = ScoreTable.load(args.table)
        column = table.column(args.stats)
        stats = analysis.distribution_stats(
            [column[i] for i in table.ids], bins=args.bins
        )
        payload = {
            "method": args.stats,
            "count": stats.count,
            "mean": stats.mean,
            "variance": stats.variance,
            "std": stats.std,
            "skewness": stats.skewness,
            "min": stats.min,
            "q1": stats.q1,
            "median": stats.median,
            "q3": stats.q3,
            "max": stats.max,
        }
        print(json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2))
        if args.histogram_csv:
            with open(args.histogram_csv, "w", encoding="utf-8") as fh:
                fh.write(analysis.histogram_csv(stats))
            print(f"histogram: {args.histogram_csv}")
        did_something = True
    if not did_something:
        raise ConfigError("analyze needs --selections and/or --stats")
    return EXIT_OK


def cmd_report(args) -> int:
    stats = None
    fingerprint_parts: dict = {}
    if args.corpus:
        built = corpus_mod.load_corpus(args.corpus)
        stats = built.stats()
        fingerprint_parts["tokenizer"] = [
            built.tokenizer.source_lang,
            built.tokenizer.target_lang,
            built.tokenizer.max_tokens,
        ]
    columns = None
    if args.table:
        table = ScoreTable.load(args.table)
        columns = {name: table.column(name) for name in table.methods()}
        fingerprint_parts["columns"] = {
            name: table.meta[name]["flags"] for name in table.methods()
        }
    named = _load_selection_sets(args.selections) if args.selections else []
    blob = analysis.emit_report(
        corpus_stats=stats,
        selections=named,
        score_columns=columns,
        format=args.format,
        fingerprint=config_fingerprint(fingerprint_parts),
        bins=args.bins,
    )
    with open(args.output, "wb") as fh:
        fh.write(blob)
    print(f"report: {args.output}")
    return EXIT_OK


def _apply_config(args) -> None:
    """Fill unset flags from --config, then from builtin defaults."""
    if args.config:
        config = PipelineConfig.from_file(args.config)
        defaults = {
            "corpus": config.corpus,
            "table": config.table,
            "seed": config.seed,
            "side": config.side,
            "lm_order": config.lm_order,
            "lm_alpha": config.lm_alpha,
        }
        if args.output_dir is None and config.output_dir:
            args.output_dir = config.output_dir
        for key, value in defaults.items():
            if value is not None and hasattr(args, key) and getattr(args, key) is None:
                setattr(args, key, value)
        if hasattr(args, "method") and isinstance(args.method, list) and not args.method:
            args.method = list(config.methods)
    builtin = {"side": "both", "lm_order": 3, "lm_alpha": 0.1, "seed": 42}
    for key, value in builtin.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "ingest": cmd_ingest,
        "score": cmd_score,
        "select": cmd_select,
        "analyze": cmd_analyze,
        "report": cmd_report,
    }
    try:
        _apply_config(args)
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ScorerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCORER
    except (InputError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
